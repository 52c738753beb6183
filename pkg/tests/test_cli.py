import hashlib

import numpy as np
import pytest

from soundsight.cli import main
from soundsight.dsp import wav_read
from soundsight.image import image_read, pgm_write
from soundsight.schemes import scheme_to_text
from soundsight.session import Session
from soundsight.stimuli import (
    LESSON_SHAPES,
    StimulusSpec,
    corpus_read,
    render_shape,
)


def run(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestEncodeDecode:
    def test_encode_writes_correct_wav(self, tmp_path, capsys):
        img_path = tmp_path / "circle.pgm"
        pgm_write(render_shape(StimulusSpec(LESSON_SHAPES, "circle"), 64), img_path)
        out = tmp_path / "circle.wav"
        code, stdout, _ = run(
            ["encode", "--image", str(img_path), "--scheme", "primary", "--out", str(out)],
            capsys,
        )
        assert code == 0
        assert str(out) in stdout
        clip = wav_read(out)
        assert len(clip) == 16800
        assert clip.sample_rate_hz == 16000

    def test_scheme_file_path_accepted(self, tmp_path, capsys, tanh2):
        scheme_path = tmp_path / "tanh2.scheme"
        scheme_path.write_text(scheme_to_text(tanh2))
        img_path = tmp_path / "sq.pgm"
        pgm_write(render_shape(StimulusSpec(LESSON_SHAPES, "square"), 64), img_path)
        out = tmp_path / "sq.wav"
        code, _, _ = run(
            ["encode", "--image", str(img_path), "--scheme", str(scheme_path), "--out", str(out)],
            capsys,
        )
        assert code == 0
        assert len(wav_read(out)) == 32000

    def test_decode_round_trip(self, tmp_path, capsys, tanh2):
        img = render_shape(StimulusSpec(LESSON_SHAPES, "circle"), 64)
        img_path = tmp_path / "in.pgm"
        pgm_write(img, img_path)
        scheme_path = tmp_path / "tanh2.scheme"
        scheme_path.write_text(scheme_to_text(tanh2))
        wav = tmp_path / "mid.wav"
        back = tmp_path / "back.pgm"
        assert run(
            ["encode", "--image", str(img_path), "--scheme", str(scheme_path), "--out", str(wav)],
            capsys,
        )[0] == 0
        code, stdout, _ = run(
            [
                "decode", "--wav", str(wav), "--scheme", str(scheme_path),
                "--rows", "64", "--cols", "64", "--out", str(back),
            ],
            capsys,
        )
        assert code == 0
        rebuilt = image_read(back)
        r = np.corrcoef(
            img.pixels.ravel().astype(float), rebuilt.pixels.ravel().astype(float)
        )[0, 1]
        assert r > 0.9

    def test_undecodable_scheme_fails_cleanly(self, tmp_path, capsys):
        img_path = tmp_path / "in.pgm"
        pgm_write(render_shape(StimulusSpec(LESSON_SHAPES, "circle"), 64), img_path)
        wav = tmp_path / "mid.wav"
        run(["encode", "--image", str(img_path), "--scheme", "primary", "--out", str(wav)], capsys)
        code, stdout, stderr = run(
            [
                "decode", "--wav", str(wav), "--scheme", "primary",
                "--rows", "64", "--cols", "64", "--out", str(tmp_path / "x.pgm"),
            ],
            capsys,
        )
        assert code == 1
        assert stdout == ""
        assert stderr.startswith("error: ")
        assert len(stderr.strip().splitlines()) == 1

    def test_missing_image_fails_cleanly(self, tmp_path, capsys):
        code, _, stderr = run(
            [
                "encode", "--image", str(tmp_path / "ghost.pgm"),
                "--scheme", "primary", "--out", str(tmp_path / "x.wav"),
            ],
            capsys,
        )
        assert code == 1
        assert stderr.startswith("error: ")

    def test_rate_mismatch_rejected(self, tmp_path, capsys, tanh2):
        # a scheme file with a different rate must refuse a 16 kHz wav
        img_path = tmp_path / "in.pgm"
        pgm_write(render_shape(StimulusSpec(LESSON_SHAPES, "circle"), 64), img_path)
        wav = tmp_path / "mid.wav"
        run(["encode", "--image", str(img_path), "--scheme", "primary", "--out", str(wav)], capsys)
        other = tanh2.__class__(
            "tanh2-8k", tanh2.pf, tanh2.duration_s, sample_rate_hz=8000
        )
        scheme_path = tmp_path / "other.scheme"
        scheme_path.write_text(scheme_to_text(other))
        code, _, stderr = run(
            [
                "decode", "--wav", str(wav), "--scheme", str(scheme_path),
                "--rows", "64", "--cols", "64", "--out", str(tmp_path / "x.pgm"),
            ],
            capsys,
        )
        assert code == 1
        assert "does not match scheme rate" in stderr


class TestGenStimuli:
    def test_all_kinds_write_expected_counts(self, tmp_path, capsys):
        out = tmp_path / "corpus"
        code, stdout, _ = run(
            ["gen-stimuli", "--kind", "all", "--size", "32", "--out", str(out)], capsys
        )
        assert code == 0
        assert "lessons+objects" in stdout
        corpus = corpus_read(out)
        assert len(corpus.items) == 23 + 720
        assert sum(1 for item in corpus.items if item.split == "test") == 100
        assert (out / "shapes-circle.pgm").exists()

    def test_lessons_only(self, tmp_path, capsys):
        out = tmp_path / "corpus"
        code, _, _ = run(["gen-stimuli", "--kind", "lessons", "--size", "32", "--out", str(out)], capsys)
        assert code == 0
        assert len(corpus_read(out).items) == 23

    def test_rerun_on_same_dir_fails_cleanly(self, tmp_path, capsys):
        out = tmp_path / "corpus"
        run(["gen-stimuli", "--kind", "lessons", "--size", "32", "--out", str(out)], capsys)
        code, _, stderr = run(
            ["gen-stimuli", "--kind", "lessons", "--size", "32", "--out", str(out)], capsys
        )
        assert code == 1
        assert "already contains" in stderr


class TestEval:
    def test_duplicate_scheme_is_deterministic(self, small_corpus_dir, tmp_path, capsys):
        out = tmp_path / "report.txt"
        csv_out = tmp_path / "report.csv"
        code, stdout, _ = run(
            [
                "eval", "--corpus", str(small_corpus_dir),
                "--schemes", "primary", "primary2",
                "--out", str(out), "--csv", str(csv_out),
                "--k", "3", "--n-perm", "50",
            ],
            capsys,
        )
        # identical preset under two names -> identical metrics, p = 1
        assert code == 1  # primary2 is not a preset
        code, stdout, _ = run(
            [
                "eval", "--corpus", str(small_corpus_dir),
                "--schemes", "primary", "primary",
                "--out", str(out), "--csv", str(csv_out),
                "--k", "3", "--n-perm", "50",
            ],
            capsys,
        )
        assert code == 0
        text = out.read_text()
        assert stdout == text
        assert "pair.primary.vs.primary.p_adjusted = 1.000000" in text
        rows = csv_out.read_text().strip().splitlines()
        assert len(rows) == 3
        assert rows[1] == rows[2].replace("primary", "primary", 1)

    def test_external_metric_flag(self, small_corpus_dir, tmp_path, capsys):
        out = tmp_path / "report.txt"
        code, stdout, _ = run(
            [
                "eval", "--corpus", str(small_corpus_dir),
                "--schemes", "primary", "long",
                "--out", str(out), "--k", "3", "--n-perm", "50",
                "--external-metric", "primary=0.4,long=0.6",
            ],
            capsys,
        )
        assert code == 0
        assert "external_correlation.macro_f1 = " in stdout

    def test_bad_external_metric_fails_cleanly(self, small_corpus_dir, tmp_path, capsys):
        code, _, stderr = run(
            [
                "eval", "--corpus", str(small_corpus_dir),
                "--schemes", "primary", "long",
                "--out", str(tmp_path / "r.txt"), "--external-metric", "primary0.4",
            ],
            capsys,
        )
        assert code == 1
        assert "expected name=value" in stderr

    def test_missing_corpus_fails_cleanly(self, tmp_path, capsys):
        code, _, stderr = run(
            [
                "eval", "--corpus", str(tmp_path / "nowhere"),
                "--schemes", "primary", "long", "--out", str(tmp_path / "r.txt"),
            ],
            capsys,
        )
        assert code == 1
        assert stderr.startswith("error: ")


@pytest.fixture(scope="module")
def data_dir(small_corpus, small_corpus_dir, tmp_path_factory, primary):
    root = tmp_path_factory.mktemp("clidata")
    store = root / "sessions"
    for seed in (1, 2):
        session = Session.create(
            store, primary, "primary", small_corpus, str(small_corpus_dir),
            seed=seed, session_id=f"cli{seed}",
        )
        while session.phase != "complete":
            trial = session.next_stimulus()
            if trial.expects_answer:
                options = session.labels_for_phase(trial.phase)
                digest = hashlib.sha256(trial.stimulus_id.encode()).digest()
                session.submit_answer(trial.stimulus_id, options[digest[0] % len(options)])
    return root


class TestReport:
    def test_single_session_report(self, data_dir, small_corpus_dir, capsys):
        code, stdout, _ = run(
            [
                "report", "--session", "cli1",
                "--data-dir", str(data_dir), "--corpus", str(small_corpus_dir),
            ],
            capsys,
        )
        assert code == 0
        assert stdout.startswith("session_id = cli1\n")
        assert "macro_f1 = " in stdout

    def test_group_report(self, data_dir, small_corpus_dir, capsys):
        code, stdout, _ = run(
            [
                "report", "--group", "primary",
                "--data-dir", str(data_dir), "--corpus", str(small_corpus_dir),
            ],
            capsys,
        )
        assert code == 0
        assert "n_sessions = 2" in stdout
        assert "sessions = cli1,cli2" in stdout
        assert "macro_f1_sd = " in stdout

    def test_unknown_session_fails_cleanly(self, data_dir, small_corpus_dir, capsys):
        code, _, stderr = run(
            [
                "report", "--session", "ghost",
                "--data-dir", str(data_dir), "--corpus", str(small_corpus_dir),
            ],
            capsys,
        )
        assert code == 1
        assert stderr.startswith("error: ")

    def test_session_and_group_mutually_exclusive(self, data_dir, capsys):
        with pytest.raises(SystemExit):
            main(["report", "--session", "a", "--group", "b", "--data-dir", str(data_dir)])
