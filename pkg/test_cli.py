"""
Test suite for the command-line interface.
"""

import io
import os
import shutil
import tempfile

import numpy as np
import pytest

from src.cli import LABEL_MATRICES_HTML, main
from src.error_handler import EXIT_IO, EXIT_OK, EXIT_USAGE
from src.export import SUMMARY_CSV, SUMMARY_HTML, SUMMARY_JSON
from src.models import LabelMatrix

QUICK_CONFIG = """\
scheme = {scheme}
{scale}
train_sizes = 20, 40
seeds = 0, 1
validation_per_class = 10
test_per_class = 10
distractor_dims = 2
label_noise = 0.2
steps = 10
checkpoint_interval = 5
hidden_layers = 8
batch_size = 16
output_dir = {out}
"""


class TestCLI:
    """Test cases for the ordinal command."""

    def setup_method(self):
        self.temp_dir = tempfile.mkdtemp()
        self.stdout = io.StringIO()

    def teardown_method(self):
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def run(self, *argv):
        return main(list(argv), stdout=self.stdout)

    def write_config(self, name, scheme="sord_circular", scale="s = 1", out=None):
        path = os.path.join(self.temp_dir, name)
        with open(path, "w", encoding="utf-8") as f:
            f.write(QUICK_CONFIG.format(scheme=scheme, scale=scale,
                                        out=out or os.path.join(self.temp_dir, "runs")))
        return path

    # encode

    def test_encode_sord_circular(self):
        assert self.run("encode", "--scheme", "sord_circular", "--k", "4", "--s", "1") == EXIT_OK
        matrix = LabelMatrix.from_text(self.stdout.getvalue())
        np.testing.assert_allclose(matrix.row(0), [0.854948, 0.072504, 4.4221e-05, 0.072504],
                                   atol=1e-5)
        assert self.stdout.getvalue().count("\n") == 4

    def test_encode_missing_scale(self, capsys):
        assert self.run("encode", "--scheme", "sord_circular", "--k", "4") == EXIT_USAGE
        diagnostic = capsys.readouterr().err.splitlines()[-1]
        assert diagnostic.startswith("error: [configuration] ")
        assert "'s'" in diagnostic
        assert self.stdout.getvalue() == ""

    def test_encode_learned_defaults_to_zero_alpha(self):
        assert self.run("encode", "--scheme", "learned") == EXIT_OK
        row = LabelMatrix.from_text(self.stdout.getvalue()).row(0)
        np.testing.assert_allclose(row, [0.855, 0.0483333, 0.0483333, 0.0483333], atol=1e-6)

    def test_encode_plsord_lists_candidates(self):
        assert self.run("encode", "--scheme", "plsord", "--s", "1",
                        "--positions", "0, 0.5pi, pi, 1.5pi") == EXIT_OK
        blocks = self.stdout.getvalue().split("# candidate ")[1:]
        assert len(blocks) == 3
        for block in blocks:
            body = block.split("\n", 1)[1]
            assert LabelMatrix.from_text(body).num_classes == 4

    def test_encode_writes_figure(self):
        path = os.path.join(self.temp_dir, "onehot.html")
        assert self.run("encode", "--scheme", "onehot", "--figure", path) == EXIT_OK
        assert os.path.exists(path)

    def test_bad_number_is_usage_error(self, capsys):
        assert self.run("encode", "--scheme", "sord_linear", "--s", "wide") == EXIT_USAGE
        assert "error: [configuration]" in capsys.readouterr().err

    def test_unknown_subcommand(self):
        assert self.run("fit") == EXIT_USAGE

    # train

    def test_train_unknown_key(self, capsys):
        path = os.path.join(self.temp_dir, "bad.cfg")
        with open(path, "w", encoding="utf-8") as f:
            f.write("scheme = onehot\nsigma = 2\n")
        assert self.run("train", "--config", path) == EXIT_USAGE
        assert "unknown key 'sigma'" in capsys.readouterr().err

    def test_train_missing_scale_names_the_key(self, capsys):
        path = self.write_config("no_scale.cfg", scale="")
        assert self.run("train", "--config", path) == EXIT_USAGE
        assert "'s'" in capsys.readouterr().err

    def test_train_single_cell(self):
        path = self.write_config("quick.cfg")
        out = os.path.join(self.temp_dir, "single")
        assert self.run("train", "--config", path, "--seed", "3", "--size", "20",
                        "--out", out) == EXIT_OK
        report_path, accuracy = self.stdout.getvalue().strip().split("\t")
        assert report_path == os.path.join(out, "sord_circular_s1_n20_seed3.json")
        assert os.path.exists(report_path)
        assert accuracy.startswith("test_accuracy=")

    # sweep and report

    def test_sweep_then_report_reproduces_summary(self):
        configs = [self.write_config("sord.cfg"),
                   self.write_config("onehot.cfg", scheme="onehot", scale="")]
        runs = os.path.join(self.temp_dir, "runs")
        argv = ["sweep"]
        for path in configs:
            argv += ["--config", path]
        assert self.run(*argv, "--figures") == EXIT_OK
        assert self.stdout.getvalue().strip() == os.path.join(runs, SUMMARY_CSV)
        for name in (SUMMARY_CSV, SUMMARY_JSON, SUMMARY_HTML, LABEL_MATRICES_HTML):
            assert os.path.exists(os.path.join(runs, name)), name

        with open(os.path.join(runs, SUMMARY_CSV), "rb") as f:
            first = f.read()
        assert first.count(b"\n") == 1 + 2 * 2
        assert self.run("report", "--out", runs) == EXIT_OK
        with open(os.path.join(runs, SUMMARY_CSV), "rb") as f:
            assert f.read() == first

    def test_sweep_seed_override(self):
        path = self.write_config("sord.cfg")
        assert self.run("sweep", "--config", path, "--seed", "7") == EXIT_OK
        names = os.listdir(os.path.join(self.temp_dir, "runs"))
        assert "sord_circular_s1_n40_seed7.json" in names
        assert not any("seed0" in name for name in names)

    def test_sweep_rejects_mismatched_data(self):
        a = self.write_config("a.cfg")
        b = os.path.join(self.temp_dir, "b.cfg")
        with open(a, encoding="utf-8") as f:
            text = f.read()
        with open(b, "w", encoding="utf-8") as f:
            f.write(text.replace("scheme = sord_circular\ns = 1", "scheme = onehot\n")
                    .replace("label_noise = 0.2", "label_noise = 0.1"))
        assert self.run("sweep", "--config", a, "--config", b) == EXIT_USAGE

    def test_report_missing_directory(self, capsys):
        assert self.run("report", "--out", os.path.join(self.temp_dir, "absent")) == EXIT_IO
        assert capsys.readouterr().err.splitlines()[-1].startswith("error: [io] ")

    # generate and gradcheck

    def test_generate(self):
        path = os.path.join(self.temp_dir, "data.csv")
        assert self.run("generate", "--out", path, "--samples-per-class", "5",
                        "--seed", "2") == EXIT_OK
        printed_path, bayes = self.stdout.getvalue().strip().split("\t")
        assert printed_path == path
        assert bayes.startswith("bayes_error=")
        with open(path, encoding="utf-8") as f:
            assert "# seed = 2" in f.read()

    def test_gradcheck(self):
        assert self.run("gradcheck") == EXIT_OK
        names = [line.split("\t")[0] for line in self.stdout.getvalue().splitlines()]
        assert names == ["model_weights", "ordering_logits", "encoding_alpha"]


@pytest.mark.parametrize("argv", [["--help"], ["encode", "--help"]])
def test_help_exits_cleanly(argv, capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(argv)
    assert excinfo.value.code == 0
    assert "usage:" in capsys.readouterr().out
