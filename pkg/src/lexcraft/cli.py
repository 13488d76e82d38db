"""Headless driver: validate, compile, render, extract colors, serve.

Exit codes: 0 success, 2 validation errors (warnings too under --strict),
3 IO or format errors. Output is deterministic for fixed flags, except the
stage timings recorded in artifact.json.
"""

from __future__ import annotations

import functools
import sys
from pathlib import Path

import click

from . import canon
from .bundle import load_board_dir, load_bundle
from .colorlab import kmeans_palette
from .compiler import ExecutionPlan, compile_lexicon, validate
from .errors import LexcraftError, StrictWarnings, ValidationFailed
from .moodboard import DEFAULT_SEED
from .raster import decode_png
from .renderer import CompositorBackend, render

_BACKENDS = {"compositor": CompositorBackend}


def _guarded(fn):
    """Map failures onto the documented exit codes with structured stderr."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ValidationFailed, StrictWarnings) as exc:
            for diag in exc.details.get("diagnostics", []):
                click.echo(_diag_line(diag), err=True)
            click.echo(f"error: {exc.code}: {exc.message}", err=True)
            sys.exit(2)
        except LexcraftError as exc:
            click.echo(f"error: {exc.code}: {exc.message}", err=True)
            sys.exit(3)
        except (OSError, ValueError, KeyError) as exc:
            click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
            sys.exit(3)

    return wrapper


def _diag_line(diag: dict) -> str:
    ids = ",".join(diag.get("ids", []))
    return f"{diag['code']} [{ids}] {diag['message']}" if ids else f"{diag['code']} {diag['message']}"


@click.group()
def main():
    """Design-token lexicon toolkit."""


@main.command("validate")
@click.argument("bundle_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--strict", is_flag=True, help="Treat warnings as failures.")
@_guarded
def validate_cmd(bundle_path: Path, strict: bool):
    """Check a lexicon bundle and print diagnostics."""
    board, lex = load_bundle(bundle_path)
    diags = validate(lex, board)
    for diag in diags:
        click.echo(_diag_line(diag.to_doc()))
    if not diags:
        click.echo("ok")
    failed = any(d.is_error for d in diags) or (strict and diags)
    sys.exit(2 if failed else 0)


@main.command("compile")
@click.argument("bundle_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("-o", "--output", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option("--strict", is_flag=True, help="Refuse to compile with warnings.")
@_guarded
def compile_cmd(bundle_path: Path, output: Path, strict: bool):
    """Compile a lexicon bundle into a canonical plan document."""
    board, lex = load_bundle(bundle_path)
    plan = compile_lexicon(lex, board, strict=strict)
    output.parent.mkdir(parents=True, exist_ok=True)
    output.write_text(canon.dumps(plan.to_doc()) + "\n", encoding="utf-8")
    click.echo(f"{plan.plan_hash}  {output}")


@main.command("render")
@click.argument("plan_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--board", "board_dir", type=click.Path(exists=True, file_okay=False, path_type=Path), required=True)
@click.option("-o", "--output", type=click.Path(file_okay=False, path_type=Path), required=True)
@click.option("--canvas", type=int, default=1024, show_default=True, help="Square canvas side in pixels.")
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--backend", type=click.Choice(sorted(_BACKENDS)), default="compositor", show_default=True)
@_guarded
def render_cmd(plan_path: Path, board_dir: Path, output: Path, canvas: int, seed: int, backend: str):
    """Execute a plan against a board directory; write stage PNGs."""
    plan = ExecutionPlan.from_doc(canon.loads(plan_path.read_text(encoding="utf-8")))
    board = load_board_dir(board_dir)
    artifact = render(plan, board, backend=_BACKENDS[backend](), canvas=(canvas, canvas), seed=seed)
    out = artifact.export(output)
    for file in artifact.stage_filenames():
        click.echo(f"wrote {out / file}")
    click.echo(f"wrote {out / 'final.png'}")
    click.echo(f"wrote {out / 'artifact.json'}")


@main.command("colors")
@click.argument("image_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--k", type=int, default=5, show_default=True)
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@_guarded
def colors_cmd(image_path: Path, k: int, seed: int):
    """Print the image's dominant colors, one `hex weight` row per color."""
    pixels = decode_png(image_path.read_bytes())
    palette = kmeans_palette(pixels, k=k, seed=seed)
    for color, weight in palette:
        click.echo(f"{color.to_hex()} {weight:.6f}")


@main.command("serve")
@click.option("--port", type=int, default=8787, show_default=True)
@click.option("--data-dir", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Persistence root; defaults to $LEXCRAFT_DATA_DIR or a temp dir.")
@_guarded
def serve_cmd(port: int, data_dir: Path | None):
    """Run the HTTP service."""
    from .service import serve

    serve(port=port, data_dir=data_dir)


if __name__ == "__main__":
    main()
