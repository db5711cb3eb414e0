"""Key-value config parsing and the end-to-end CLI surface."""

import pytest

from beamsel.cli import main
from beamsel.config import (load_config, parse_bool, parse_int_list,
                            spec_from_mapping)
from beamsel.dataset import load_dataset_csv


class TestConfigParsing:
    def test_basic_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("""
# comment line
num_samples = 500
bin_size = 10   # trailing comment
methods = pmf, fingerprint

trials=3
""")
        cfg = load_config(path)
        assert cfg == {"num_samples": "500", "bin_size": "10",
                       "methods": "pmf, fingerprint", "trials": "3"}

    def test_rejects_malformed_line(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("just some words\n")
        with pytest.raises(ValueError):
            load_config(path)

    def test_parsers(self):
        assert parse_bool("Yes") and not parse_bool("0")
        with pytest.raises(ValueError):
            parse_bool("maybe")
        assert parse_int_list("1,2, 4 8") == (1, 2, 4, 8)

    def test_spec_from_mapping_full(self):
        cfg = {
            "area": "0 100 0 50", "bs_position": "0 25 20", "ue_height": "2.0",
            "num_paths": "9", "num_blockers": "2", "scene_seed": "5",
            "blockage_seed": "6", "tx_array": "4 2", "rx_array": "2 1",
            "tx_power_dbm": "20", "bandwidth_hz": "1e8",
            "num_samples": "300", "bin_size": "10", "sample_seed": "4",
            "methods": "pmf,oracle", "n_b_list": "1,2", "train_sizes": "200",
            "trials": "2", "base_seed": "9", "workers": "2",
            "vb_r_init": "7", "vb_max_iters": "50", "vb_prune_every_iter": "true",
            "mlp_hidden": "5,6", "mlp_epochs": "4", "mlp_batch_size": "16",
        }
        spec = spec_from_mapping(cfg)
        assert spec.scene.area == (0.0, 100.0, 0.0, 50.0)
        assert spec.scene.num_paths == 9
        assert spec.geometry_tx.m_x == 4 and spec.geometry_rx.m_y == 1
        assert abs(spec.radio.transmit_power - 100.0) < 1e-9
        assert spec.methods == ("pmf", "oracle")
        assert spec.n_b_list == (1, 2)
        assert spec.vb_hyper.r_init == 7 and spec.vb_hyper.prune_every_iter
        assert spec.mlp_hyper.hidden == (5, 6) and spec.mlp_hyper.epochs == 4
        assert spec.workers == 2


@pytest.fixture(scope="module")
def cli_config(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "run.cfg"
    path.write_text("""
area = 0 100 0 100
bs_position = 0 50 20
num_paths = 8
num_blockers = 3
tx_array = 4 2
rx_array = 2 1
num_samples = 120
bin_size = 20
methods = pmf, fingerprint, mlp
n_b_list = 1, 2, 4
train_sizes = 90
trials = 2
vb_r_init = 6
vb_max_iters = 60
mlp_epochs = 4
""")
    return str(path)


@pytest.fixture(scope="module")
def cli_workdir(tmp_path_factory, cli_config):
    work = tmp_path_factory.mktemp("cliwork")
    dataset = work / "dataset.csv"
    channels = work / "channels.bin"
    rc = main(["generate", "--out", str(dataset), "--channels", str(channels),
               "--config", cli_config, "--seed", "5"])
    assert rc == 0
    return work, dataset, channels


class TestCliGenerate:
    def test_dataset_file_loadable(self, cli_workdir):
        _, dataset, channels = cli_workdir
        ds = load_dataset_csv(dataset)
        assert len(ds) == 120
        assert ds.grid.n_x == 5 and ds.grid.n_y == 5
        assert channels.exists()


@pytest.fixture(scope="module")
def models(cli_workdir, cli_config):
    work, dataset, _ = cli_workdir
    paths = {}
    for method in ("pmf", "fingerprint", "mlp"):
        out = work / f"{method}.bsel"
        trace = str(work / "trace.csv") if method == "pmf" else None
        argv = ["train", "--method", method, "--dataset", str(dataset),
                "--out", str(out), "--config", cli_config, "--seed", "3"]
        if trace:
            argv += ["--elbo-trace", trace]
        assert main(argv) == 0
        paths[method] = out
    return paths


class TestCliTrainPredictEvaluate:
    def test_models_written(self, models):
        for path in models.values():
            assert path.exists() and path.stat().st_size > 0

    def test_elbo_trace_written(self, cli_workdir, models):
        work, _, _ = cli_workdir
        lines = (work / "trace.csv").read_text().splitlines()
        assert lines[0] == "iteration,elbo,active_components"
        assert len(lines) > 2

    def test_predict_each_model(self, cli_workdir, models, tmp_path):
        work, _, _ = cli_workdir
        positions = tmp_path / "positions.csv"
        positions.write_text("x,y,z\n10.0,20.0,1.5\n95.0,85.0,1.5\n")
        for method, model in models.items():
            out = tmp_path / f"pred_{method}.csv"
            assert main(["predict", "--model", str(model), "--positions",
                         str(positions), "--out", str(out), "--top-n", "3"]) == 0
            lines = out.read_text().strip().splitlines()
            assert lines[0] == "position_index,rank,f_index,w_index,score"
            assert len(lines) == 1 + 2 * 3
            first = lines[1].split(",")
            assert 1 <= int(first[2]) <= 8 and 1 <= int(first[3]) <= 2
            for line in lines[1:]:  # scores must be plain parseable floats
                assert float(line.split(",")[4]) >= 0.0

    def test_evaluate_models(self, cli_workdir, models, tmp_path):
        _, dataset, channels = cli_workdir
        out = tmp_path / "metrics.csv"
        argv = ["evaluate", "--dataset", str(dataset), "--out", str(out),
                "--n-b", "1,4", "--channels", str(channels)]
        for model in models.values():
            argv += ["--model", str(model)]
        assert main(argv) == 0
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 1 + 3 * 2
        for line in lines[1:]:
            cells = line.split(",")
            assert 0.0 <= float(cells[3]) <= 1.0
            assert 0.0 <= float(cells[6]) <= 1.0 + 1e-9


class TestCliSweep:
    def test_sweep_writes_outputs(self, cli_config, tmp_path):
        out = tmp_path / "sweepdir"
        assert main(["sweep", "--config", cli_config, "--out", str(out),
                     "--trials", "1", "--plot"]) == 0
        assert (out / "trials.csv").exists()
        assert (out / "aggregate.csv").exists()
        assert (out / "power_loss_vs_nb.svg").exists()

    def test_set_flag_overrides_config(self, cli_config, tmp_path):
        out = tmp_path / "sweepdir2"
        assert main(["sweep", "--config", cli_config, "--out", str(out),
                     "--trials", "1", "--set", "methods=oracle",
                     "--set", "n_b_list=1"]) == 0
        lines = (out / "trials.csv").read_text().strip().splitlines()
        assert len(lines) == 2
        assert lines[1].startswith("oracle,")
