import hashlib
import io
import json
import sys
import zipfile

import pytest

from shardvcs.cli import main
from shardvcs.middleman import MiddlemanServer, ShareCache


@pytest.fixture
def run(capsys):
    def invoke(*argv):
        rc = main(list(argv))
        captured = capsys.readouterr()
        return rc, captured.out, captured.err

    return invoke


def _field(out, label):
    line = next(l for l in out.splitlines() if l.startswith(label + ": "))
    return line.split(": ", 1)[1].split()[0]


def push_file(run, tmp_path, state, payload=b"hello shard world\n", seed=7):
    src = tmp_path / "payload.bin"
    src.write_bytes(payload)
    rc, out, _ = run("push", str(src), "--owner", "alice", "--state-dir", str(state), "--seed", str(seed))
    assert rc == 0
    return _field(out, "cid"), _field(out, "owner-share")


def test_walkthrough_push_pull_advance_grant(run, tmp_path):
    state = tmp_path / "state"
    payload = b"the repository bytes\n" * 100
    cid, share = push_file(run, tmp_path, state, payload)
    assert cid.startswith("sha256:")

    # before confirmation the cache serves the share
    out1 = tmp_path / "out1.bin"
    rc, _, err = run("pull", cid, "--as", "alice", "--share", share, "--out", str(out1), "--state-dir", str(state))
    assert rc == 0
    assert out1.read_bytes() == payload
    assert "path: middleman" in err
    assert "access-checked: False" in err

    rc, out, _ = run("advance", "20", "--state-dir", str(state))
    assert rc == 0
    assert "settled 1 transaction(s)" in out
    assert "confirmed gas=206886" in out

    out2 = tmp_path / "out2.bin"
    rc, _, err = run("pull", cid, "--as", "alice", "--share", share, "--out", str(out2), "--state-dir", str(state))
    assert rc == 0
    assert out2.read_bytes() == payload
    assert "path: on-chain" in err
    assert "access-checked: True" in err

    # a stranger is refused once ownership is on record
    rc, _, err = run("pull", cid, "--as", "mallory", "--share", share, "--out", str(tmp_path / "x"), "--state-dir", str(state))
    assert rc == 3
    assert "access denied" in err

    rc, out, _ = run("grant", cid, "--owner", "alice", "--to", "bob", "--state-dir", str(state))
    assert rc == 0
    assert "pending" in out

    # the grant has not settled yet
    rc, _, _ = run("pull", cid, "--as", "bob", "--share", share, "--out", str(tmp_path / "x"), "--state-dir", str(state))
    assert rc == 3

    rc, out, _ = run("advance", "20", "--state-dir", str(state))
    assert rc == 0
    assert "settled 1" in out

    out3 = tmp_path / "out3.bin"
    rc, _, err = run("pull", cid, "--as", "bob", "--share", share, "--out", str(out3), "--state-dir", str(state))
    assert rc == 0
    assert out3.read_bytes() == payload
    assert "path: on-chain" in err


def test_pull_to_stdout(run, tmp_path):
    state = tmp_path / "state"
    cid, share = push_file(run, tmp_path, state, b"plain ascii payload")
    rc = main(["pull", cid, "--as", "alice", "--share", share, "--state-dir", str(state)])
    assert rc == 0


def test_grant_by_non_owner_is_rejected_on_settlement(run, tmp_path):
    state = tmp_path / "state"
    cid, _ = push_file(run, tmp_path, state)
    run("advance", "20", "--state-dir", str(state))
    rc, out, _ = run("grant", cid, "--owner", "carol", "--to", "dave", "--state-dir", str(state))
    assert rc == 0  # submission succeeds; validity is checked at confirmation
    rc, out, _ = run("advance", "20", "--state-dir", str(state))
    assert rc == 0
    assert "rejected" in out and "not-owner" in out


def test_push_directory_is_deterministic(run, tmp_path):
    src = tmp_path / "repo"
    (src / "docs").mkdir(parents=True)
    (src / "a.txt").write_text("alpha\n")
    (src / "docs" / "b.txt").write_text("beta\n")

    cids = []
    shares = []
    for name in ("s1", "s2"):
        rc, out, _ = run("push", str(src), "--owner", "alice", "--state-dir", str(tmp_path / name), "--seed", "3")
        assert rc == 0
        cids.append(_field(out, "cid"))
        shares.append(_field(out, "owner-share"))
    assert cids[0] == cids[1]  # same tree, same seed: identical sealed bytes

    out_zip = tmp_path / "tree.zip"
    rc, _, _ = run(
        "pull", cids[0], "--as", "alice", "--share", shares[0],
        "--out", str(out_zip), "--state-dir", str(tmp_path / "s1"),
    )
    assert rc == 0
    with zipfile.ZipFile(out_zip) as zf:
        assert sorted(zf.namelist()) == ["a.txt", "docs/b.txt"]
        assert zf.read("a.txt") == b"alpha\n"
        assert zf.read("docs/b.txt") == b"beta\n"


def test_hex_addresses_accepted_strictly(run, tmp_path):
    state = tmp_path / "state"
    src = tmp_path / "f.bin"
    src.write_bytes(b"x")
    addr = "0x" + "ab" * 20
    rc, out, _ = run("push", str(src), "--owner", addr, "--state-dir", str(state), "--seed", "1")
    assert rc == 0
    rc, _, _ = run("push", str(src), "--owner", "0x1234", "--state-dir", str(tmp_path / "s2"), "--seed", "1")
    assert rc == 1  # malformed hex form is an error, not a label


def test_usage_errors_exit_1(run, tmp_path):
    state = str(tmp_path / "state")
    src = tmp_path / "f.bin"
    src.write_bytes(b"x")

    assert run()[0] == 1  # no command
    assert run("no-such-command")[0] == 1
    assert run("push", str(src), "--state-dir", state)[0] == 1  # missing --owner
    assert run("push", str(tmp_path / "missing.bin"), "--owner", "a", "--state-dir", state)[0] == 1
    assert run("pull", "sha256:nothex", "--as", "a", "--share", "0311", "--state-dir", state)[0] == 1
    cid = "sha256:" + hashlib.sha256(b"?").hexdigest()
    assert run("pull", cid, "--as", "a", "--share", "zz", "--state-dir", state)[0] == 1

    bad_cfg = tmp_path / "bad.cfg"
    bad_cfg.write_text("no_such_key = 1\n")
    assert run("push", str(src), "--owner", "a", "--config", str(bad_cfg), "--state-dir", state)[0] == 1
    assert run("bench", "push", "--sizes", "abc", "--repeats", "1")[0] == 1
    assert run("report", str(tmp_path / "missing.csv"))[0] == 1
    assert run("calibrate", "--reference", str(tmp_path / "missing.csv"))[0] == 1


def test_protocol_errors_exit_2(run, tmp_path):
    state = str(tmp_path / "state")
    unknown = "sha256:" + hashlib.sha256(b"never pushed").hexdigest()
    rc, _, err = run("pull", unknown, "--as", "a", "--share", "03" + "00" * 44, "--state-dir", state)
    assert rc == 2
    assert "error:" in err

    bad_csv = tmp_path / "bad.csv"
    bad_csv.write_text("wrong,header\n")
    assert run("report", str(bad_csv))[0] == 2

    ref = tmp_path / "flat.csv"
    ref.write_text(
        "size_mb,system_push_s,system_pull_s,git_push_s,git_pull_s\n"
        "1,5.0,5.0,1.0,1.0\n"
        "10,5.0,5.0,1.0,1.0\n"
    )
    assert run("calibrate", "--reference", str(ref))[0] == 2  # zero slope


def test_advance_requires_virtual_clock(run, tmp_path):
    cfg = tmp_path / "real.cfg"
    cfg.write_text("clock = real\n")
    rc, _, err = run("advance", "5", "--config", str(cfg), "--state-dir", str(tmp_path / "s"))
    assert rc == 2
    assert "error:" in err


def test_calibrate_bench_report_pipeline(run, tmp_path):
    cfg = tmp_path / "fitted.cfg"
    rc, out, _ = run("calibrate", "--write-config", str(cfg))
    assert rc == 0
    assert "store profile: fixed 1.625149 s + 0.493317 s/MB" in out
    assert cfg.exists()

    csv_path = tmp_path / "push.csv"
    rc, out, _ = run(
        "bench", "push", "--sizes", "1,5", "--repeats", "2",
        "--config", str(cfg), "--seed", "0", "--csv", str(csv_path),
    )
    assert rc == 0
    assert "wrote 4 samples" in out
    header = csv_path.read_text().splitlines()[0]
    assert header.startswith("operation,size_mb,repeat,user_perceived_s")

    rc, out, _ = run("report", str(csv_path))
    assert rc == 0
    assert "Per-size summary" in out
    assert "literature" in out

    pull_csv = tmp_path / "pull.csv"
    rc, _, _ = run(
        "bench", "pull", "--sizes", "1", "--repeats", "2",
        "--config", str(cfg), "--seed", "0", "--csv", str(pull_csv),
    )
    assert rc == 0
    assert "on-chain" in pull_csv.read_text()


def test_bench_csv_to_stdout(run):
    rc, out, _ = run("bench", "push", "--sizes", "1", "--repeats", "1", "--seed", "4")
    assert rc == 0
    assert out.startswith("operation,size_mb,repeat,")
    assert "\npush,1,0," in out


def test_report_from_stdin(run, tmp_path, monkeypatch):
    rc, out, _ = run("bench", "push", "--sizes", "1", "--repeats", "1", "--seed", "4")
    monkeypatch.setattr(sys, "stdin", io.StringIO(out))
    rc, out, _ = run("report", "-")
    assert rc == 0
    assert "Phase breakdown" in out


def test_remote_middleman_roundtrip(run, tmp_path):
    server = MiddlemanServer(ShareCache(ttl_s=3600))
    server.start()
    try:
        state = tmp_path / "state"
        src = tmp_path / "f.bin"
        payload = b"served over http\n"
        src.write_bytes(payload)
        rc, out, _ = run(
            "push", str(src), "--owner", "alice", "--state-dir", str(state),
            "--seed", "2", "--middleman-url", server.url,
        )
        assert rc == 0
        cid, share = _field(out, "cid"), _field(out, "owner-share")
        assert not (state / "middleman.json").exists()  # cache lives in the service

        dest = tmp_path / "back.bin"
        rc, _, err = run(
            "pull", cid, "--as", "alice", "--share", share, "--out", str(dest),
            "--state-dir", str(state), "--middleman-url", server.url,
        )
        assert rc == 0
        assert dest.read_bytes() == payload
        assert "path: middleman" in err
    finally:
        server.stop()


def test_remote_middleman_down_fails_push(run, tmp_path):
    import socket

    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        dead_port = s.getsockname()[1]
    src = tmp_path / "f.bin"
    src.write_bytes(b"x")
    rc, _, err = run(
        "push", str(src), "--owner", "alice", "--state-dir", str(tmp_path / "s"),
        "--middleman-url", f"http://127.0.0.1:{dead_port}",
    )
    assert rc == 2
    assert "error:" in err


def test_state_survives_failed_command(run, tmp_path):
    state = tmp_path / "state"
    cid, share = push_file(run, tmp_path, state)
    assert run("advance", "20", "--state-dir", str(state))[0] == 0
    before = json.loads((state / "chain.json").read_text())
    rc, _, _ = run("pull", cid, "--as", "mallory", "--share", share, "--out", str(tmp_path / "x"), "--state-dir", str(state))
    assert rc == 3
    after = json.loads((state / "chain.json").read_text())
    assert after["chain"] == before["chain"]  # a denied pull does not mutate the ledger
