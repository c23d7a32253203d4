import pytest

from capsule_codec.config import ConfigError, RunConfig, load_config, parse_config
from capsule_codec.transform import default_tables, lossless_tables


def test_empty_is_default():
    assert parse_config("") == RunConfig()


def test_sections_override():
    cfg = parse_config(
        """
[controller]
reduced_fps = 0.5   ; slower
cr_threshold = 4.0
[energy]
bitrate_bps = 8e6
[runtime]
a = 40
[bubbles]
radius_min = 4
[sweep]
thresholds = 3.0, 3.6
reduced_fps = 1.0 0.5
[synth]
seed = 9
"""
    )
    assert cfg.controller.reduced_fps == 0.5 and cfg.controller.cr_threshold == 4.0
    assert cfg.energy.bitrate_bps == 8e6
    assert cfg.runtime.a == 40.0
    assert cfg.hough.radius_min == 4 and isinstance(cfg.hough.radius_min, int)
    assert cfg.thresholds == (3.0, 3.6) and cfg.rates == (1.0, 0.5)
    assert cfg.synth.seed == 9 and cfg.synth.size == 320


def test_codec_tables(tmp_path):
    assert parse_config("[codec]\ntables = lossless\n").tables == lossless_tables()
    luma = " ".join(["1"] * 16)
    cfg = parse_config(f"[codec]\nluma = {luma}\n")
    assert cfg.tables.luma == (1,) * 16 and cfg.tables.chroma == default_tables().chroma
    (tmp_path / "t.txt").write_text("luma=" + " ".join(["0"] * 16) + "\nchroma=" + " ".join(["2"] * 16) + "\n")
    (tmp_path / "run.ini").write_text("[codec]\ntables = t.txt\n")
    assert load_config(tmp_path / "run.ini").tables.chroma == (2,) * 16


@pytest.mark.parametrize(
    "text",
    [
        "[nope]\n",
        "[controller]\nfps = 2\n",
        "[controller]\nreduced_fps = fast\n",
        "[controller]\nreduced_fps = 3\n",
        "[codec]\ntables = missing.txt\n",
        "[codec]\nluma = 1 2 3\n",
        "[sweep]\nreduced_fps = 5\n",
        "[sweep]\nthresholds = 0.5\n",
        "[synth]\nsize = 100\n",
        "no section header\n",
    ],
)
def test_rejects(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "none.ini")
