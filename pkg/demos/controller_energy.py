#!/usr/bin/env python3
# Frame-rate control on a synthetic study and what it saves.

import numpy as np

from capsule_codec.controller import ControllerConfig, missed_pathologies, run_trace, sweep
from capsule_codec.energy import frame_energy, simulate_study
from capsule_codec.synth import constant_trace, study_trace

# per-frame budget at the mean operating point
fe = frame_energy(5.79)
print(f"capture {fe.capture_uj:.2f} uJ  compression {fe.compression_uj:.2f} uJ "
      f"({fe.compression_ms:.1f} ms)  transmission {fe.transmission_uj:.2f} uJ")
raw = frame_energy(5.79, compressed=False)
print(f"uncompressed transmission {raw.transmission_uj:.2f} uJ ({raw.transmission_ms:.0f} ms)")

# compression alone on a steady study
rep = simulate_study(constant_trace(5.748, 1200))
print(f"\ncompression-only saving at CR 5.748: {rep.reduction_comp_pct:.2f}%")

# a 10 minute study with bubble-heavy stretches
tr = study_trace(np.random.default_rng(59), low_fraction=0.6, mean_regime=80)
cfg = ControllerConfig(2.0, 0.67, 3.6)
sched = run_trace(tr, cfg)
rep = simulate_study(tr, sched, cfg)
print(f"\nframes {len(tr)}, below threshold {100 * tr.fraction_below(3.6):.0f}%")
print(f"captured {len(sched)}, skipped {sched.skipped}, missed episodes {missed_pathologies(tr, sched)}")
print(f"energy mJ: baseline {rep.baseline_uj / 1000:.1f}  compressed {rep.comp_only_uj / 1000:.1f}  "
      f"controller {rep.controller_uj / 1000:.1f}")
print(f"reductions: {rep.reduction_comp_pct:.1f}% / {rep.reduction_ctrl_pct:.1f}%")

# threshold x reduced-rate grid, summed over a few studies
traces = [study_trace(np.random.default_rng([1, i])) for i in range(5)]
cells = sweep(traces, [3.0, 3.6, 4.2], [1.0, 0.67, 0.33])
print("\nthreshold  fps   missed  reduction%")
for c in cells:
    print(f"  {c.threshold:4.1f}    {c.reduced_fps:4.2f}   {c.missed:3d}     {c.reduction_pct:5.1f}")
