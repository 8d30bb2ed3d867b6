"""End-to-end runs of the command-line front end, in process."""

import argparse
import json
import math

import numpy as np
import pytest
from scipy.io import wavfile

import mep.spectral
from mep import audio, cli, matrixio
from mep.attacks import METHODS
from mep.spectral import MelFilterbank, StftConfig


def _probe_samples():
    """Half sine, half near-silence, with a tiny dither so no bin is
    exactly zero."""
    t = np.arange(16000) / 16000.0
    wave = np.zeros(16000)
    wave[:8000] = 0.3 * np.sin(2.0 * np.pi * 440.0 * t[:8000])
    wave = wave + 1e-6 * np.random.default_rng(7).standard_normal(16000)
    return wave.astype(np.float32)


@pytest.fixture
def probe_wav(tmp_path):
    path = tmp_path / "probe.wav"
    wavfile.write(path, 16000, _probe_samples())
    return str(path)


@pytest.fixture
def pcm_wav(tmp_path):
    """A PCM-16 tone; its decoded samples sit exactly on the k/32768 grid."""
    t = np.arange(16000) / 16000.0
    tone = np.rint(0.25 * np.sin(2.0 * np.pi * 330.0 * t) * 32768.0)
    path = tmp_path / "tone.wav"
    wavfile.write(path, 16000, np.clip(tone, -32768, 32767).astype(np.int16))
    return str(path)


# -- mask subcommand ---------------------------------------------------------

def _parse_kv_lines(out):
    values = {}
    for line in out.splitlines():
        if ": " in line and not line.startswith("wrote"):
            key, _, val = line.partition(": ")
            values[key] = val
    return values


def test_mask_fraction_strictly_interior(probe_wav, tmp_path, capsys):
    rc = cli.main(["mask", probe_wav, "--out-dir", str(tmp_path / "m")])
    assert rc == 0
    vals = _parse_kv_lines(capsys.readouterr().out)
    fraction = float(vals["masked_fraction"])
    assert 0.0 < fraction < 1.0
    x_peak = float(vals["x_peak"])
    x_th = float(vals["x_th"])
    assert x_th == pytest.approx(x_peak * 10.0 ** (-2.0), rel=1e-6)


def test_mask_very_low_threshold_keeps_everything(probe_wav, tmp_path, capsys):
    rc = cli.main(["mask", probe_wav, "--eta-th", "-200",
                   "--out-dir", str(tmp_path / "m")])
    assert rc == 0
    vals = _parse_kv_lines(capsys.readouterr().out)
    assert float(vals["masked_fraction"]) < 0.05


def test_mask_file_matches_naive_recomputation(probe_wav, tmp_path, capsys):
    out = tmp_path / "m"
    assert cli.main(["mask", probe_wav, "--out-dir", str(out)]) == 0
    capsys.readouterr()

    wave = audio.read_wav(probe_wav)
    power = mep.spectral.power(mep.spectral.stft(wave.samples, StftConfig())).data
    values = sorted((float(v) for v in power.ravel()), reverse=True)
    n_drop = math.floor(0.05 * len(values))
    x_th = values[n_drop] * 10.0 ** (-20.0 / 10.0)
    naive = (power >= x_th).astype(np.float64)

    stored = matrixio.load_matrix(out / "mask.mepm")
    assert np.array_equal(stored, naive)


# -- attack subcommand -------------------------------------------------------

def test_attack_zero_epsilon_is_identity(pcm_wav, tmp_path, capsys):
    out = tmp_path / "a"
    rc = cli.main(["attack", pcm_wav, "--epsilon", "0",
                   "--out-dir", str(out)])
    assert rc == 0
    capsys.readouterr()
    _, original = wavfile.read(pcm_wav)
    _, adversarial = wavfile.read(out / "adversarial.wav")
    assert original.dtype == adversarial.dtype == np.int16
    assert np.array_equal(original, adversarial)
    report = json.loads((out / "attack.json").read_text())
    assert report["delta_linf"] == 0.0
    assert report["snr_db"] == "inf"


def test_attack_defaults_recorded(probe_wav, tmp_path, capsys):
    out = tmp_path / "a"
    rc = cli.main(["attack", probe_wav, "--out-dir", str(out)])
    assert rc == 0
    stdout = capsys.readouterr().out
    report = json.loads((out / "attack.json").read_text())
    assert report["method"] == "i-mep"
    assert report["epsilon"] == 0.0002
    assert report["iterations"] == 20
    assert report["alpha"] == pytest.approx(1e-5, rel=1e-12)
    assert report["eta_th"] == -20.0
    assert len(report["loss_trace"]) == 20
    # the default target is the input's own embedding, a stationary point
    # of the loss, so the trace starts at zero and the perturbation may
    # legitimately stay exactly zero; only the budget bound is guaranteed
    assert report["loss_trace"][0] <= 1e-9
    assert 0.0 <= report["delta_linf"] <= 0.0002
    delta = matrixio.load_matrix(out / "delta.mepm")
    assert np.max(np.abs(delta)) <= 0.0002 * (1.0 + 1e-7)
    assert "method: i-mep" in stdout
    assert "wrote" in stdout


def test_attack_repeat_runs_byte_identical(probe_wav, tmp_path, capsys):
    args = ["attack", probe_wav, "--method", "pgd", "--seed", "11"]
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert cli.main(args + ["--out-dir", str(out_a)]) == 0
    assert cli.main(args + ["--out-dir", str(out_b)]) == 0
    capsys.readouterr()
    for name in ("adversarial.wav", "delta.mepm", "attack.json"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_attack_toward_foreign_target(probe_wav, tmp_path, capsys):
    other = tmp_path / "other.wav"
    t = np.arange(16000) / 16000.0
    wavfile.write(other, 16000,
                  (0.2 * np.sin(2.0 * np.pi * 600.0 * t)).astype(np.float32))
    out = tmp_path / "a"
    rc = cli.main(["attack", probe_wav, "--target", str(other),
                   "--method", "fgsm", "--out-dir", str(out)])
    assert rc == 0
    capsys.readouterr()
    report = json.loads((out / "attack.json").read_text())
    assert report["method"] == "fgsm"
    assert len(report["loss_trace"]) == 1
    assert report["loss_trace"][0] > 0.01
    assert report["delta_linf"] == 0.0002


def test_attack_config_file_defaults_flags_win(probe_wav, tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# defaults for this experiment\n"
        "eta-th = -30\n"
        "epsilon = 0.0001\n"
        "method = fgsm\n"
    )
    out = tmp_path / "a"
    rc = cli.main(["attack", probe_wav, "--config", str(cfg),
                   "--epsilon", "0.0005", "--out-dir", str(out)])
    assert rc == 0
    capsys.readouterr()
    report = json.loads((out / "attack.json").read_text())
    assert report["epsilon"] == 0.0005  # flag beats config
    assert report["eta_th"] == -30.0    # config beats default
    assert report["method"] == "fgsm"


# -- evaluate subcommand -----------------------------------------------------

TINY = ["--speakers", "3", "--utterances", "4", "--duration", "0.3"]


def test_evaluate_baseline_only(tmp_path, capsys):
    out = tmp_path / "e"
    rc = cli.main(["evaluate", "--methods", "baseline",
                   "--out-dir", str(out)] + TINY)
    assert rc == 0
    captured = capsys.readouterr()
    report = json.loads((out / "report.json").read_text())
    assert report["rows"] == []
    assert report["corpus"]["n_speakers"] == 3
    assert report["corpus"]["utterances_per_speaker"] == 4
    assert isinstance(report["baseline_eer_percent"], float)
    csv_lines = (out / "report.csv").read_text().splitlines()
    assert len(csv_lines) == 2
    assert csv_lines[0].startswith("method,")
    assert csv_lines[1].startswith("baseline,")
    assert "wrote" in captured.err


def test_evaluate_all_methods_echo_defaults(tmp_path, capsys):
    out = tmp_path / "e"
    rc = cli.main(["evaluate", "--methods", "all",
                   "--out-dir", str(out)] + TINY)
    assert rc == 0
    capsys.readouterr()
    report = json.loads((out / "report.json").read_text())
    assert [row["method"] for row in report["rows"]] == list(METHODS)
    for row in report["rows"]:
        assert row["epsilon"] == 0.0002
        assert row["iterations"] == 20
        assert row["eta_th"] == -20.0
        assert row["baseline_eer_percent"] == report["baseline_eer_percent"]
    csv_lines = (out / "report.csv").read_text().splitlines()
    assert len(csv_lines) == 2 + len(METHODS)


def test_evaluate_repeat_runs_byte_identical(tmp_path, capsys):
    args = ["evaluate", "--methods", "fgsm,mep"] + TINY
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert cli.main(args + ["--out-dir", str(out_a)]) == 0
    assert cli.main(args + ["--out-dir", str(out_b)]) == 0
    capsys.readouterr()
    assert (out_a / "report.json").read_bytes() == (out_b / "report.json").read_bytes()
    assert (out_a / "report.csv").read_bytes() == (out_b / "report.csv").read_bytes()


def test_evaluate_csv_format_echoes_file(tmp_path, capsys):
    out = tmp_path / "e"
    rc = cli.main(["evaluate", "--methods", "baseline", "--format", "csv",
                   "--out-dir", str(out)] + TINY)
    assert rc == 0
    captured = capsys.readouterr()
    assert captured.out == (out / "report.csv").read_text()


def test_evaluate_unknown_method_usage_error(tmp_path, capsys):
    rc = cli.main(["evaluate", "--methods", "fgsm,bogus",
                   "--out-dir", str(tmp_path)] + TINY)
    assert rc == 2
    assert "usage error" in capsys.readouterr().err


# -- error paths -------------------------------------------------------------

def test_missing_input_exit_code(tmp_path, capsys):
    rc = cli.main(["mask", str(tmp_path / "absent.wav")])
    assert rc == 1
    assert "error" in capsys.readouterr().err


def test_malformed_config_usage_error(probe_wav, tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("epsilon 0.0005\n")
    rc = cli.main(["mask", probe_wav, "--config", str(cfg),
                   "--out-dir", str(tmp_path)])
    assert rc == 2
    assert "usage error" in capsys.readouterr().err


def test_missing_subcommand_argparse_exit():
    with pytest.raises(SystemExit) as excinfo:
        cli.main([])
    assert excinfo.value.code == 2


# -- selfcheck subcommand ----------------------------------------------------

def test_selfcheck_pristine(capsys):
    rc = cli.main(["selfcheck"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "roundtrip: 12 passed, 0 failed [ok]" in out
    assert "gradient: 4 passed, 0 failed [ok]" in out
    assert "mask: 30 passed, 0 failed [ok]" in out
    assert out.rstrip().endswith("selfcheck: ok")


def test_selfcheck_flags_corrupted_gradient(monkeypatch, capsys):
    real = mep.spectral.mel_backward

    def corrupted(grad_log_mel, power_spec, fb):
        return 1.5 * real(grad_log_mel, power_spec, fb)

    monkeypatch.setattr(mep.spectral, "mel_backward", corrupted)
    rc = cli.main(["selfcheck"])
    out = capsys.readouterr().out
    assert rc == 1
    assert "gradient: 0 passed, 4 failed [FAIL]" in out
    assert "roundtrip: 12 passed, 0 failed [ok]" in out
    assert "selfcheck: FAILED" in out


# -- helper units ------------------------------------------------------------

def test_jsonable_sentinels():
    doc = cli.jsonable({
        "a": float("inf"),
        "b": float("-inf"),
        "c": float("nan"),
        "d": np.float64(2.5),
        "e": np.int32(7),
        "f": np.bool_(True),
        "g": np.array([1.0, float("inf")]),
    })
    assert doc["a"] == "inf"
    assert doc["b"] == "-inf"
    assert doc["c"] == "nan"
    assert doc["d"] == 2.5 and isinstance(doc["d"], float)
    assert doc["e"] == 7 and isinstance(doc["e"], int)
    assert doc["f"] is True
    assert doc["g"] == [1.0, "inf"]


def test_dump_json_sorted_and_stable():
    text = cli.dump_json({"zeta": 1, "alpha": {"b": 2, "a": 3}})
    assert text.index('"alpha"') < text.index('"zeta"')
    assert text == cli.dump_json({"alpha": {"a": 3, "b": 2}, "zeta": 1})
    json.loads(text)


def test_load_config_parsing(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(
        "\n"
        "# full-line comment\n"
        "eta-th = -25   # trailing comment\n"
        "iterations=5\n"
    )
    assert cli.load_config(str(cfg)) == {"eta_th": "-25", "iterations": "5"}


def test_load_config_rejects_bad_line(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("just words\n")
    with pytest.raises(cli.UsageError):
        cli.load_config(str(cfg))


def test_cast_bool_tokens():
    for raw in ("1", "true", "Yes", "ON"):
        assert cli._cast("k", raw, bool) is True
    for raw in ("0", "false", "No", "off"):
        assert cli._cast("k", raw, bool) is False
    with pytest.raises(cli.UsageError):
        cli._cast("k", "maybe", bool)
    with pytest.raises(cli.UsageError):
        cli._cast("k", "abc", float)


def test_resolve_precedence():
    args = argparse.Namespace(epsilon=0.5)
    assert cli.resolve(args, {"epsilon": "0.1"}, "epsilon", 0.9, float) == 0.5
    args = argparse.Namespace(epsilon=None)
    assert cli.resolve(args, {"epsilon": "0.1"}, "epsilon", 0.9, float) == 0.1
    assert cli.resolve(args, {}, "epsilon", 0.9, float) == 0.9
    with pytest.raises(cli.UsageError):
        cli.resolve(args, {"epsilon": "0.1"}, "epsilon", 0.9, float,
                    choices=(0.9, 0.2))


def test_parse_methods_expansion():
    assert cli._parse_methods("all") == list(METHODS)
    assert cli._parse_methods("baseline") == []
    assert cli._parse_methods("fgsm,fgsm,mep") == ["fgsm", "mep"]
    assert cli._parse_methods("mep,all")[0] == "mep"
    with pytest.raises(cli.UsageError):
        cli._parse_methods("carlini")
    with pytest.raises(cli.UsageError):
        cli._parse_methods(" , ")
