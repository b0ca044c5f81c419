"""MarketPalace command line.

Node commands: keygen, register, serve, status, list, add-listing,
remove, bid, chat. Operator commands: door-keygen, door-serve,
issue-attribute. Experiment driver: simulate.

Exit codes: 0 success, 1 generic failure, 2 duplicate identity,
3 network failure.
"""

from __future__ import annotations

import json
import logging
import os
import sys
from pathlib import Path

import click
import requests

from marketpalace import __version__
from marketpalace.canonical import b64encode
from marketpalace.crypto import generate_keypair
from marketpalace.crypto import keys as crypto_keys
from marketpalace.door.attributes import AttributeIssuer
from marketpalace.door.config import DoorConfig
from marketpalace.door.httpapi import build_door_server
from marketpalace.errors import MarketPalaceError, NetworkError
from marketpalace.nodeapp import keyfiles
from marketpalace.nodeapp.config import NodeConfig
from marketpalace.nodeapp.daemon import (
    PASSPHRASE_ENV,
    NodeDaemon,
    NotRegisteredError,
    is_registered,
    resolve_passphrase,
)
from marketpalace.nodeapp.registerclient import (
    DuplicateIdentityError,
    fetch_mock_disclosure,
    register,
)

EXIT_DUPLICATE = 2
EXIT_NETWORK = 3

logger = logging.getLogger(__name__)


def _fail(message: str, code: int = 1) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _passphrase(passphrase: str | None, confirm: bool = False) -> str:
    if passphrase is not None:
        return passphrase
    env = os.environ.get(PASSPHRASE_ENV)
    if env is not None:
        return env
    return click.prompt(
        "Passphrase", hide_input=True, confirmation_prompt=confirm
    )


def _load_config(path: str) -> NodeConfig:
    try:
        return NodeConfig.load(path)
    except MarketPalaceError as exc:
        _fail(str(exc))


def _api_base(config: NodeConfig) -> str:
    """The node API address: runtime.json when the daemon runs, else config."""
    runtime = config.runtime_path
    if runtime.exists():
        try:
            data = json.loads(runtime.read_text("utf-8"))
            return f"http://{data['api_addr']}"
        except (OSError, ValueError, KeyError):
            pass
    return f"http://{config.api_addr}"


def _api_call(method: str, url: str, payload: dict | None = None) -> dict:
    try:
        reply = requests.request(method, url, json=payload, timeout=10)
    except requests.RequestException as exc:
        _fail(f"node API unreachable ({exc}); is the daemon running?", EXIT_NETWORK)
    if reply.status_code >= 400:
        try:
            detail = reply.json()
        except ValueError:
            detail = {"error": reply.text[:200]}
        _fail(f"{reply.status_code}: {detail.get('error')} {detail.get('detail', '')}")
    return reply.json()


@click.group()
@click.version_option(version=__version__, prog_name="marketpalace")
@click.option("--verbose", is_flag=True, help="Log at INFO level to stderr.")
def main(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
        stream=sys.stderr,
    )


# -- key lifecycle -------------------------------------------------------


@main.command()
@click.option("--out", "out_dir", required=True, type=click.Path(), help="Key directory.")
@click.option("--bits", default=2048, show_default=True)
@click.option("--force", is_flag=True, help="Overwrite existing key files.")
@click.option("--passphrase", default=None, help="Otherwise prompted or taken from env.")
def keygen(out_dir: str, bits: int, force: bool, passphrase: str | None) -> None:
    """Generate an RSA key pair; the private key is passphrase-encrypted."""
    secret = _passphrase(passphrase, confirm=passphrase is None)
    try:
        keypair = generate_keypair(bits)
        private_path, public_path = keyfiles.write_keypair(
            out_dir, keypair, secret, force=force
        )
    except MarketPalaceError as exc:
        _fail(str(exc))
    click.echo(f"wrote {private_path}")
    click.echo(f"wrote {public_path}")
    click.echo(f"fingerprint: {crypto_keys.fingerprint(keypair.public_key)}")


@main.command("register")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option(
    "--disclosure",
    "disclosure_path",
    type=click.Path(exists=True),
    default=None,
    help="Issuer-signed attribute disclosure JSON.",
)
@click.option(
    "--mock-attribute",
    default=None,
    metavar="NAME=VALUE",
    help="Ask the door server's dev mock issuer to sign this attribute.",
)
def register_cmd(
    config_path: str, disclosure_path: str | None, mock_attribute: str | None
) -> None:
    """Register with the door server and store the certified key bundle."""
    config = _load_config(config_path)
    if disclosure_path is None and mock_attribute is None:
        _fail("pass --disclosure FILE or --mock-attribute NAME=VALUE")
    try:
        if disclosure_path is not None:
            disclosure = json.loads(Path(disclosure_path).read_text("utf-8"))
        else:
            name, _, value = mock_attribute.partition("=")
            if not name or not value:
                _fail("--mock-attribute must look like ssn=123456782")
            disclosure = fetch_mock_disclosure(
                config.door_server_url.rstrip("/"), name, value
            )
        outcome = register(config, disclosure)
    except DuplicateIdentityError as exc:
        _fail(str(exc), EXIT_DUPLICATE)
    except NetworkError as exc:
        _fail(str(exc), EXIT_NETWORK)
    except (MarketPalaceError, OSError, ValueError) as exc:
        _fail(str(exc))
    state = "already registered" if outcome.already_registered else "registered"
    click.echo(f"{state}; fingerprint {outcome.cert.fingerprint}")


# -- daemon ---------------------------------------------------------------


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--passphrase", default=None)
def serve(config_path: str, passphrase: str | None) -> None:
    """Run the market node until SIGTERM/SIGINT."""
    config = _load_config(config_path)
    try:
        daemon = NodeDaemon(config, passphrase=_passphrase(passphrase))
    except NotRegisteredError as exc:
        _fail(f"{exc}\nrun `marketpalace keygen` and `marketpalace register` first")
    except MarketPalaceError as exc:
        _fail(str(exc))
    try:
        daemon.run_until_signal()
    except OSError as exc:
        _fail(f"startup failed: {exc}")


# -- market client commands ------------------------------------------------


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def status(config_path: str) -> None:
    """Show node status (daemon must be running)."""
    config = _load_config(config_path)
    if not is_registered(config):
        click.echo("registered: false")
        return
    data = _api_call("GET", f"{_api_base(config)}/status")
    for key in ("peer_id", "peer_count", "listing_count", "uptime_s", "registered"):
        click.echo(f"{key}: {data[key]}")


@main.command("add-listing")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--title", required=True)
@click.option("--description", default="")
@click.option("--price", "price_amount", required=True, type=int, help="Minor units.")
@click.option("--currency", default="EUR", show_default=True)
@click.option("--ttl", "ttl_s", default=7 * 24 * 3600, show_default=True, type=int)
def add_listing(config_path, title, description, price_amount, currency, ttl_s):
    """Create, sign, and store a listing; gossip spreads it."""
    config = _load_config(config_path)
    data = _api_call(
        "POST",
        f"{_api_base(config)}/listings",
        {
            "title": title,
            "description": description,
            "price_amount": price_amount,
            "currency": currency,
            "ttl_s": ttl_s,
        },
    )
    click.echo(data["content_id"])


@main.command("list")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def list_cmd(config_path: str) -> None:
    """List all valid listings this node holds."""
    config = _load_config(config_path)
    data = _api_call("GET", f"{_api_base(config)}/listings")
    for row in data["listings"]:
        listing = row["listing"]
        mine = "*" if row["mine"] else " "
        price = listing["price_amount"] / 100
        click.echo(
            f"{mine} {row['content_id'][:12]}  {listing['title'][:40]:40} "
            f"{price:10.2f} {listing['currency']}"
        )
    click.echo(f"({len(data['listings'])} listings)")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.argument("content_id")
def remove(config_path: str, content_id: str) -> None:
    """Remove an owned listing (tombstones it network-wide)."""
    config = _load_config(config_path)
    data = _api_call("DELETE", f"{_api_base(config)}/listings/{content_id}")
    click.echo(f"removed {data['removed']}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--listing", "content_id", required=True)
@click.option("--amount", required=True, type=int, help="Minor units.")
@click.option("--currency", default="EUR", show_default=True)
def bid(config_path: str, content_id: str, amount: int, currency: str) -> None:
    """Send a bid envelope to a listing's owner."""
    config = _load_config(config_path)
    listings = _api_call("GET", f"{_api_base(config)}/listings")["listings"]
    match = next((r for r in listings if r["content_id"] == content_id), None)
    if match is None:
        _fail(f"listing {content_id[:12]}… not held by this node")
    data = _api_call(
        "POST",
        f"{_api_base(config)}/bids",
        {
            "content_id": content_id,
            "amount": amount,
            "currency": currency,
            "target_peer": match["listing"]["owner_fingerprint"],
        },
    )
    click.echo("bid delivered" if data.get("delivered") else "bid failed")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--channel", "channel_id", default=None)
@click.option("--listing", "content_id", default=None)
@click.option("--body", default=None)
def chat(config_path, channel_id, content_id, body):
    """List channels, show one channel, or send a message."""
    config = _load_config(config_path)
    base = _api_base(config)
    if channel_id is None and content_id is not None:
        listings = _api_call("GET", f"{base}/listings")["listings"]
        match = next((r for r in listings if r["content_id"] == content_id), None)
        if match is None:
            _fail(f"listing {content_id[:12]}… not held by this node")
        channel_id = match.get("chat_channel_id")
        if not channel_id:
            _fail("that listing is yours; wait for a buyer to open the chat")
    if channel_id is None:
        data = _api_call("GET", f"{base}/chats")
        for row in data["channels"]:
            click.echo(
                f"{row['channel_id'][:16]}  peer {row['peer_fingerprint'][:12]}  "
                f"{row['message_count']} messages"
            )
        click.echo(f"({len(data['channels'])} channels)")
        return
    if body is None:
        data = _api_call("GET", f"{base}/chats/{channel_id}")
        for msg in data["messages"]:
            arrow = ">" if msg["direction"] == "sent" else "<"
            click.echo(f"{arrow} {msg['body']}")
        return
    _api_call("POST", f"{base}/chats/{channel_id}", {"body": body})
    click.echo("sent")


# -- door server ------------------------------------------------------------


@main.command("door-keygen")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--bits", default=2048, show_default=True)
@click.option("--force", is_flag=True)
def door_keygen(out_path: str, bits: int, force: bool) -> None:
    """Generate the door server's signing key (PEM, unencrypted)."""
    path = Path(out_path)
    if path.exists() and not force:
        _fail(f"{path} already exists; pass --force to overwrite")
    keypair = generate_keypair(bits)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(crypto_keys.private_key_pem(keypair.private_key))
    click.echo(f"wrote {path}")
    click.echo(
        f"public key (base64 DER): "
        f"{b64encode(crypto_keys.public_key_bytes(keypair.public_key))}"
    )


@main.command("door-serve")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def door_serve(config_path: str) -> None:
    """Run the registration door server."""
    try:
        config = DoorConfig.load(config_path)
        server = build_door_server(config, base_dir=Path(config_path).resolve().parent)
    except (MarketPalaceError, OSError) as exc:
        _fail(str(exc))
    scheme = "https" if config.tls.enabled else "http"
    click.echo(f"door server on {scheme}://{server.address}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.stop()


@main.command("issue-attribute")
@click.option("--key", "key_path", required=True, type=click.Path(exists=True),
              help="Issuer private key PEM.")
@click.option("--issuer-id", required=True)
@click.option("--name", "attribute_name", required=True)
@click.option("--value", "attribute_value", required=True)
@click.option("--out", "out_path", default=None, type=click.Path())
def issue_attribute(key_path, issuer_id, attribute_name, attribute_value, out_path):
    """Sign an attribute disclosure with an issuer key (mock wallet)."""
    keypair = crypto_keys.load_private_key_pem(Path(key_path).read_bytes())
    issuer = AttributeIssuer(issuer_id, keypair.private_key)
    disclosure = issuer.issue(attribute_name, attribute_value)
    text = json.dumps(disclosure.to_dict(), indent=2, sort_keys=True) + "\n"
    if out_path is None:
        click.echo(text, nl=False)
    else:
        Path(out_path).write_text(text)
        click.echo(f"wrote {out_path}")


# -- simulator ---------------------------------------------------------------


@main.command()
@click.option("--nodes", "num_nodes", default=4, show_default=True, type=int)
@click.option("--period", "timer_period_s", default=90.0, show_default=True, type=float)
@click.option("--k", default=20, show_default=True, type=int)
@click.option("--trials", default=100, show_default=True, type=int)
@click.option("--seed", default=42, show_default=True, type=int)
@click.option(
    "--topology",
    default="complete",
    show_default=True,
    type=click.Choice(["complete", "ring", "random"]),
)
@click.option("--degree", default=None, type=int, help="For random topology.")
@click.option("--link-delay", "link_delay_s", default=0.0, show_default=True, type=float)
@click.option("--out", "out_path", default="results.csv", show_default=True,
              type=click.Path())
@click.option("--raw", "raw_path", default=None, type=click.Path(),
              help="Raw delays file; defaults to OUT with .raw suffix.")
def simulate(num_nodes, timer_period_s, k, trials, seed, topology, degree,
             link_delay_s, out_path, raw_path):
    """Run the propagation experiment and write CSV + raw delays."""
    from marketpalace.sim import SimConfig, run_experiment, write_sweep_csv
    from marketpalace.sim.model import us_to_str
    from marketpalace.sim.sweep import SweepRow

    try:
        config = SimConfig(
            num_nodes=num_nodes,
            timer_period_s=timer_period_s,
            k=k,
            seed=seed,
            topology=topology,
            degree=degree,
            link_delay_s=link_delay_s,
            trials=trials,
        )
        summary, results = run_experiment(config)
    except MarketPalaceError as exc:
        _fail(str(exc))

    out = Path(out_path)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        write_sweep_csv([SweepRow(config, summary, tuple(results))], fh)
    raw = Path(raw_path) if raw_path else out.with_suffix(".raw")
    raw.write_text("".join(us_to_str(r.delay_us) + "\n" for r in results))

    click.echo(f"n={summary.n} mean={summary.mean_s:.1f}s median={summary.median_s:.1f}s "
               f"stddev={summary.stddev_s:.1f}s mode={summary.mode_s:.0f}s "
               f"p95={summary.p95_s:.1f}s")
    click.echo(f"wrote {out} and {raw}")


if __name__ == "__main__":
    main()
