"""Command-line client.

Thin wrapper over the HTTP service: each verb posts the configuration to
the corresponding endpoint (in-process by default, or a remote server
via --server / VISCOBEAM_SERVER), writes the returned artifact files to
the output directory, prints the report, and exits with the service's
exit code (0 ok, 2 configuration error, 3 numerical error).
"""

import sys
from pathlib import Path

import click
import httpx


def _client(server):
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .service import app
    return TestClient(app)


def _invoke(verb, config_path, out, server):
    text = Path(config_path).read_text(encoding="utf-8")
    with _client(server) as client:
        resp = client.post(f"/{verb}", json={"config_toml": text})
    resp.raise_for_status()
    data = resp.json()
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    for name, content in data["files"].items():
        (outdir / name).write_text(content, encoding="utf-8")
    click.echo(data["report"], nl=False)
    sys.exit(data["exit_code"])


_shared = [
    click.argument("config_path", type=click.Path(exists=True, dir_okay=False)),
    click.option("--out", envvar="VISCOBEAM_OUT", default=".",
                 help="Output directory for artifacts."),
    click.option("--server", envvar="VISCOBEAM_SERVER", default=None,
                 help="Base URL of a running service; in-process if unset."),
]


def _with_shared(fn):
    for deco in reversed(_shared):
        fn = deco(fn)
    return fn


@click.group()
def main():
    """Viscoelastic beam gradient flows and thin-limit checks."""


@main.command()
@_with_shared
def run(config_path, out, server):
    """Execute the minimizing-movement flow and emit its artifacts."""
    _invoke("run", config_path, out, server)


@main.command()
@_with_shared
def verify(config_path, out, server):
    """Run the invariant suite and print a pass/fail report."""
    _invoke("verify", config_path, out, server)


@main.command()
@_with_shared
def gamma(config_path, out, server):
    """Build the thin-limit convergence table."""
    _invoke("gamma", config_path, out, server)


@main.command()
@_with_shared
def quadforms(config_path, out, server):
    """Report the reduced quadratic-form constants."""
    _invoke("quadforms", config_path, out, server)


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8000, type=int)
def serve(host, port):
    """Start the HTTP service."""
    import uvicorn

    from .service import app
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
