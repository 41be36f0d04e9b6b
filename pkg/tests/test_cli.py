import json
import subprocess
import sys

import pytest

from lda2iot.cli import EXIT_DENIED, EXIT_ERROR, EXIT_OK, main
from lda2iot.runtime import card_load, registry_load_all


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("LDA2IOT_PASSPHRASE", "test-pass")
    return tmp_path


@pytest.fixture
def deployed(workdir):
    assert main(["init", "--seed", "1", "--store", "d.lda"]) == EXIT_OK
    assert main(["register", "--store", "d.lda", "--user", "director", "--password", "dpw", "--seed", "1"]) == 0
    assert main(["register", "--store", "d.lda", "--user", "clerk", "--password", "cpw", "--seed", "1"]) == 0
    return workdir


def test_init_creates_55_records(workdir, capsys):
    assert main(["init", "--seed", "3", "--store", "x.lda"]) == EXIT_OK
    assert "55 credential records" in capsys.readouterr().out
    gw, extra = registry_load_all(workdir / "x.lda", "test-pass")
    assert len(extra["users"]) == 5 and len(extra["sensors"]) == 50
    assert len(gw.users) + len(gw.sensors) == 55


def test_init_refuses_overwrite(workdir, capsys):
    assert main(["init", "--seed", "3", "--store", "x.lda"]) == EXIT_OK
    assert main(["init", "--seed", "3", "--store", "x.lda"]) == EXIT_ERROR
    assert "--force" in capsys.readouterr().err
    assert main(["init", "--seed", "4", "--store", "x.lda", "--force"]) == EXIT_OK


def test_same_seed_same_bytes(workdir):
    main(["init", "--seed", "9", "--store", "a.lda"])
    main(["init", "--seed", "9", "--store", "b.lda"])
    assert (workdir / "a.lda").read_bytes() == (workdir / "b.lda").read_bytes()


def test_missing_passphrase(workdir, monkeypatch, capsys):
    monkeypatch.delenv("LDA2IOT_PASSPHRASE")
    assert main(["init", "--store", "a.lda"]) == EXIT_ERROR
    assert "passphrase" in capsys.readouterr().err


def test_register_writes_loadable_card(deployed):
    card = card_load(deployed / "director.card")
    assert len(card.B_i) == 32


def test_register_unknown_user(deployed, capsys):
    assert main(["register", "--store", "d.lda", "--user", "nobody", "--password", "x"]) == EXIT_ERROR
    assert "UnknownUser" in capsys.readouterr().err


def test_session_allowed(deployed, capsys):
    rc = main(["session", "--store", "d.lda", "--user", "director", "--password", "dpw", "--sensor", "canteen",
               "--seed", "1"])
    out = capsys.readouterr().out
    assert rc == EXIT_OK and "key agreed" in out
    prints = [line.split()[-1] for line in out.splitlines() if "fingerprint" in line]
    assert len(prints) == 2 and prints[0] == prints[1] and len(prints[0]) == 16


def test_session_denied(deployed, capsys):
    rc = main(["session", "--store", "d.lda", "--user", "clerk", "--password", "cpw", "--sensor",
               "director-office", "--seed", "1"])
    assert rc == EXIT_DENIED and "0 signal" in capsys.readouterr().out


def test_session_wrong_password(deployed, capsys):
    rc = main(["session", "--store", "d.lda", "--user", "director", "--password", "nope", "--sensor", "canteen"])
    assert rc == EXIT_ERROR and "nothing was sent" in capsys.readouterr().out


def test_session_batch(deployed, capsys):
    (deployed / "batch.txt").write_text("# user password sensor\ndirector dpw lab\nclerk cpw parking\n"
                                        "clerk cpw lab\n")
    rc = main(["session", "--store", "d.lda", "--batch", "batch.txt", "--seed", "2"])
    out = capsys.readouterr().out
    assert rc == EXIT_DENIED
    assert out.count("key agreed") == 2 and out.count("0 signal") == 1


def test_no_secrets_printed(deployed, capsys):
    main(["session", "--store", "d.lda", "--user", "director", "--password", "dpw", "--sensor", "canteen",
          "--seed", "1"])
    main(["bench", "bits", "--store", "d.lda", "--seed", "1", "--out", "b.json"])
    text = capsys.readouterr().out
    gw, extra = registry_load_all(deployed / "d.lda", "test-pass")
    assert gw.master.hex() not in text and format(gw.priv, "x") not in text
    for rec in extra["users"].values():
        assert rec["uid"] not in text


def test_attack_suite_and_errors(workdir, capsys):
    assert main(["attack", "--seed", "1", "--budget", "1000"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("pass") >= 20
    assert main(["attack", "no_such_attack"]) == EXIT_ERROR
    assert "no_such_attack" in capsys.readouterr().err
    assert main(["attack", "--list"]) == EXIT_OK
    assert "documented" in capsys.readouterr().out


def test_attack_scenario_file_and_export(workdir, capsys):
    (workdir / "s.json").write_text(json.dumps([{"name": "tamper_again", "description": "bit flip",
                                                  "rules": [{"on": "msg1", "do": "modify",
                                                             "forger": "flip_ciphertext"}],
                                                  "expect_error": "IntegrityFailure"}]))
    assert main(["attack", "--scenario-file", "s.json", "--export", "tx", "--seed", "2"]) == EXIT_OK
    assert json.loads((workdir / "tx" / "tamper_again.json").read_text())[0]["action"] == "modify"


def test_attack_exit_code_on_failure(workdir):
    # a scenario expecting the wrong error counts as a failure
    (workdir / "s.json").write_text(json.dumps({"name": "wrong_expectation", "description": "x",
                                                "rules": [{"on": "msg1", "do": "modify", "forger": "forge_msg1"}],
                                                "expect_error": "StaleTimestamp"}))
    assert main(["attack", "--scenario-file", "s.json"]) == EXIT_ERROR


@pytest.mark.parametrize("kind", ["bits", "time", "rtd", "throughput"])
def test_bench_kinds(deployed, capsys, kind):
    args = ["bench", kind, "--store", "d.lda", "--seed", "1", "--trials", "5", "--runs", "2",
            "--out", f"{kind}.json", "--baseline"]
    assert main(args) == EXIT_OK
    assert "reference" in capsys.readouterr().out
    assert json.loads((deployed / f"{kind}.json").read_text())


def test_config_file_and_overrides(workdir, capsys):
    cfg = {"users": [["alice", 1], ["bob", 3]], "sensors": [["door", 2]], "delta_t": 1000}
    (workdir / "c.json").write_text(json.dumps(cfg))
    assert main(["init", "--config", "c.json", "--store", "c.lda", "--seed", "1"]) == EXIT_OK
    assert "3 credential records" in capsys.readouterr().out
    main(["register", "--config", "c.json", "--store", "c.lda", "--user", "bob", "--password", "b"])
    rc = main(["session", "--config", "c.json", "--store", "c.lda", "--user", "bob", "--password", "b",
               "--sensor", "door"])
    assert rc == EXIT_DENIED
    (workdir / "bad.json").write_text(json.dumps({"users": [["x", 99]]}))
    assert main(["init", "--config", "bad.json", "--store", "z.lda"]) == EXIT_ERROR
    (workdir / "bad2.json").write_text(json.dumps({"colour": "red"}))
    assert main(["init", "--config", "bad2.json", "--store", "z.lda"]) == EXIT_ERROR


def test_broker_transport_reported(deployed, capsys):
    rc = main(["session", "--store", "d.lda", "--user", "director", "--password", "dpw", "--sensor", "lab",
               "--transport", "localhost:1883"])
    assert rc == EXIT_ERROR and "broker" in capsys.readouterr().err


def test_module_entry_point(workdir):
    proc = subprocess.run([sys.executable, "-m", "lda2iot", "attack", "--list"], capture_output=True, text=True)
    assert proc.returncode == 0 and "replay_msg1" in proc.stdout
