import json

import pytest
from click.testing import CliRunner

from marketpalace.cli import main
from marketpalace.nodeapp.config import NodeConfig

from .procutil import (
    TEST_PASSPHRASE,
    provision_node,
    spawn_node,
    start_door,
    write_node_config,
)


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def env(monkeypatch):
    monkeypatch.setenv("MARKETPALACE_PASSPHRASE", TEST_PASSPHRASE)


def test_keygen_creates_files_and_refuses_rerun(tmp_path, runner, env):
    out = runner.invoke(main, ["keygen", "--out", str(tmp_path / "keys")])
    assert out.exit_code == 0, out.output
    assert (tmp_path / "keys" / "private_key.json").exists()
    assert (tmp_path / "keys" / "public_key.json").exists()

    again = runner.invoke(main, ["keygen", "--out", str(tmp_path / "keys")])
    assert again.exit_code == 1
    assert "already exists" in again.output

    forced = runner.invoke(
        main, ["keygen", "--out", str(tmp_path / "keys"), "--force"]
    )
    assert forced.exit_code == 0


def test_keygen_output_loads_back(tmp_path, runner, env):
    runner.invoke(main, ["keygen", "--out", str(tmp_path / "keys")])
    from marketpalace.nodeapp import keyfiles

    keypair = keyfiles.load_keypair(tmp_path / "keys", TEST_PASSPHRASE)
    assert keypair.modulus_bits >= 2048


def test_register_flow_and_exit_codes(tmp_path, runner, env, keypool, server_keys):
    door = start_door(tmp_path, server_keys, keypool[6])
    try:
        config_path = write_node_config(tmp_path / "n1", door.url)
        config = NodeConfig.load(config_path)
        from marketpalace.nodeapp import keyfiles

        keyfiles.write_keypair(config.key_dir, keypool[2], TEST_PASSPHRASE)

        ok = runner.invoke(
            main,
            ["register", "--config", str(config_path), "--mock-attribute", "ssn=111"],
        )
        assert ok.exit_code == 0, ok.output
        assert "registered" in ok.output
        assert config.resolve(config.key_bundle_path).exists()

        # Idempotent rerun: no-op reporting the existing bundle.
        rerun = runner.invoke(
            main,
            ["register", "--config", str(config_path), "--mock-attribute", "ssn=111"],
        )
        assert rerun.exit_code == 0
        assert "already registered" in rerun.output

        # Same attribute, fresh keys: the Sybil gate answers duplicate.
        config2_path = write_node_config(tmp_path / "n2", door.url)
        config2 = NodeConfig.load(config2_path)
        keyfiles.write_keypair(config2.key_dir, keypool[3], TEST_PASSPHRASE)
        dup = runner.invoke(
            main,
            ["register", "--config", str(config2_path), "--mock-attribute", "ssn=111"],
        )
        assert dup.exit_code == 2
        assert "already registered" in dup.output or "denied" in dup.output
    finally:
        door.stop()

    # Door server now down: network failure is exit 3, and no partial state.
    config3_path = write_node_config(tmp_path / "n3", door.url)
    config3 = NodeConfig.load(config3_path)
    from marketpalace.nodeapp import keyfiles

    keyfiles.write_keypair(config3.key_dir, keypool[4], TEST_PASSPHRASE)
    down = runner.invoke(
        main,
        ["register", "--config", str(config3_path), "--mock-attribute", "ssn=222"],
    )
    assert down.exit_code == 3
    assert not config3.resolve(config3.key_bundle_path).exists()


def test_register_with_disclosure_file(tmp_path, runner, env, keypool, server_keys):
    door = start_door(tmp_path, server_keys, keypool[6])
    try:
        from marketpalace.crypto import keys as crypto_keys
        from marketpalace.nodeapp import keyfiles

        issuer_pem = tmp_path / "issuer.pem"
        issuer_pem.write_bytes(crypto_keys.private_key_pem(keypool[6].private_key))
        disclosure_path = tmp_path / "disclosure.json"
        issued = runner.invoke(
            main,
            [
                "issue-attribute",
                "--key", str(issuer_pem),
                "--issuer-id", "mock-issuer",
                "--name", "ssn",
                "--value", "disclosure-file-1",
                "--out", str(disclosure_path),
            ],
        )
        assert issued.exit_code == 0, issued.output

        config_path = write_node_config(tmp_path / "n", door.url)
        config = NodeConfig.load(config_path)
        keyfiles.write_keypair(config.key_dir, keypool[5], TEST_PASSPHRASE)
        ok = runner.invoke(
            main,
            [
                "register",
                "--config", str(config_path),
                "--disclosure", str(disclosure_path),
            ],
        )
        assert ok.exit_code == 0, ok.output
    finally:
        door.stop()


def test_door_keygen(tmp_path, runner):
    out = runner.invoke(main, ["door-keygen", "--out", str(tmp_path / "door.pem")])
    assert out.exit_code == 0
    assert (tmp_path / "door.pem").exists()
    again = runner.invoke(main, ["door-keygen", "--out", str(tmp_path / "door.pem")])
    assert again.exit_code == 1


def test_simulate_writes_csv_and_raw(tmp_path, runner):
    out_path = tmp_path / "results.csv"
    result = runner.invoke(
        main,
        [
            "simulate", "--nodes", "4", "--period", "90", "--k", "20",
            "--trials", "50", "--seed", "42", "--topology", "complete",
            "--out", str(out_path),
        ],
    )
    assert result.exit_code == 0, result.output
    lines = out_path.read_text().strip().split("\n")
    assert len(lines) == 2
    raw = (tmp_path / "results.raw").read_text().strip().split("\n")
    assert len(raw) == 50
    float(raw[0])


def test_status_unregistered(tmp_path, runner, env, keypool, server_keys):
    door = start_door(tmp_path, server_keys, keypool[6])
    try:
        config_path = write_node_config(tmp_path / "n", door.url)
        out = runner.invoke(main, ["status", "--config", str(config_path)])
        assert out.exit_code == 0
        assert "registered: false" in out.output.lower()
    finally:
        door.stop()


def test_client_commands_against_live_daemon(
    tmp_path, runner, env, keypool, server_keys
):
    door = start_door(tmp_path, server_keys, keypool[6])
    node = None
    try:
        config_path = provision_node(
            tmp_path / "n", door, "ssn-cli-daemon", keypair=keypool[7],
            period_s=3600,
        )
        node = spawn_node(config_path)

        added = runner.invoke(
            main,
            [
                "add-listing", "--config", str(config_path),
                "--title", "cli bike", "--price", "1234",
            ],
        )
        assert added.exit_code == 0, added.output
        cid = added.output.strip()

        listed = runner.invoke(main, ["list", "--config", str(config_path)])
        assert listed.exit_code == 0
        assert "cli bike" in listed.output
        assert cid[:12] in listed.output

        stat = runner.invoke(main, ["status", "--config", str(config_path)])
        assert stat.exit_code == 0
        assert "listing_count: 1" in stat.output

        removed = runner.invoke(
            main, ["remove", "--config", str(config_path), cid]
        )
        assert removed.exit_code == 0

        relisted = runner.invoke(main, ["list", "--config", str(config_path)])
        assert "cli bike" not in relisted.output
    finally:
        if node is not None:
            node.stop()
        door.stop()
