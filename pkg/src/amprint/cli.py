"""Command-line entry point.

Exit codes: 0 success, 1 domain error (bad mesh, unsupported characteristic,
diverged training, ...), 2 usage error. Output files are written atomically
so a domain error never leaves a partial file behind.
"""

from __future__ import annotations

import json
import os
import sys
import tempfile

import click
import numpy as np

from . import __version__
from .errors import AmprintError


def _atomic_write(path, write_fn):
    """Write via a sibling temp file + rename; never leaves partial output."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".amprint-")
    os.close(fd)
    try:
        write_fn(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(summary: dict, as_json: bool):
    if as_json:
        click.echo(json.dumps(summary, indent=2, sort_keys=True))
    else:
        for key, value in summary.items():
            click.echo(f"{key}: {value}")


@click.group()
@click.version_option(__version__)
def cli():
    """Dimensional-error prediction and printability scoring toolkit."""


# -- mesh ---------------------------------------------------------------------


@cli.group()
def mesh():
    """Mesh inspection."""


@mesh.command("info")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["stl", "stl-binary", "stl-ascii", "ply", "obj"]),
              default=None, help="Override the extension-inferred format.")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
def mesh_info(path, fmt, as_json):
    """Load, validate and summarize a mesh."""
    from . import mesh as m

    tri = m.load_mesh(path, fmt)
    box = m.bounding_box(tri)
    _emit({
        "path": path,
        "vertices": tri.num_vertices,
        "triangles": tri.num_triangles,
        "surface_area_mm2": m.surface_area(tri),
        "closed": tri.is_closed(),
        "euler_characteristic": tri.euler_characteristic(),
        "bbox_min": list(box.min),
        "bbox_max": list(box.max),
    }, as_json)


# -- features -------------------------------------------------------------------


@cli.group()
def features():
    """Per-vertex predictor features."""


@features.command("extract")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False),
              help="Destination CSV.")
@click.option("--format", "fmt", default=None,
              type=click.Choice(["stl", "stl-binary", "stl-ascii", "ply", "obj"]))
@click.option("--json", "as_json", is_flag=True)
def features_extract(path, out, fmt, as_json):
    """Write the 10-column feature CSV for every vertex."""
    from . import features as f
    from . import mesh as m

    tri = m.load_mesh(path, fmt)
    rows = f.extract_features(tri)
    _atomic_write(out, lambda tmp: f.write_features_csv(tmp, rows))
    _emit({"rows": len(rows), "out": out}, as_json)


# -- ann ------------------------------------------------------------------------


@cli.group()
def ann():
    """Train and run the error regressor."""


@ann.command("train")
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Feature CSV with a target column.")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--epochs", default=50, show_default=True)
@click.option("--split", default=0.2, show_default=True, help="Validation fraction.")
@click.option("--seed", default=0, show_default=True)
@click.option("--lr", default=1e-3, show_default=True)
@click.option("--batch", default=256, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def ann_train(data, out, epochs, split, seed, lr, batch, as_json):
    """Train on a feature+target CSV and save the model JSON."""
    from . import features as f
    from . import net as n

    x, y = f.read_features_csv(data)
    if y is None:
        raise AmprintError(f"{data} has no target column")
    model, history = n.train((x, y), epochs=epochs, split=split, seed=seed,
                             lr=lr, batch_size=batch)
    _atomic_write(out, lambda tmp: n.save_model(model, tmp))
    _emit({
        "samples": len(x),
        "epochs": epochs,
        "best_epoch": history.best_epoch,
        "train_mse": history.train_mse[history.best_epoch],
        "val_mse": history.val_mse[history.best_epoch],
        "out": out,
    }, as_json)


@ann.command("predict")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--json", "as_json", is_flag=True)
def ann_predict(model_path, data, out, as_json):
    """Predict per-row error; reports MAE/STD/Pearson when targets exist."""
    from . import features as f
    from . import net as n

    model = n.load_model(model_path)
    x, y = f.read_features_csv(data)
    pred = n.predict(model, x)

    def write(tmp):
        with open(tmp, "w") as fh:
            fh.write("predicted_error\n")
            for v in pred:
                fh.write(f"{v:.9g}\n")

    _atomic_write(out, write)
    summary = {"rows": len(pred), "mean_predicted": float(pred.mean()), "out": out}
    if y is not None:
        summary["mae_actual"] = float(np.abs(y).mean())
        summary["mae_predicted"] = float(pred.mean())
        summary["pearson"] = n.pearson_correlation(pred, y)
    _emit(summary, as_json)


@ann.command("importance")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--repeats", default=30, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def ann_importance(model_path, data, repeats, seed, as_json):
    """Permutation feature importance on a feature+target CSV."""
    from . import features as f
    from . import net as n

    model = n.load_model(model_path)
    x, y = f.read_features_csv(data)
    if y is None:
        raise AmprintError(f"{data} has no target column")
    scores, flags = n.permutation_importance(model, (x, y), repeats=repeats, seed=seed)
    _emit({
        "importance": {name: float(s) for name, s in zip(f.FEATURE_NAMES, scores)},
        "zero_std_flags": [f.FEATURE_NAMES[i] for i in np.nonzero(flags)[0]],
    }, as_json)


# -- slicing / reconstruction ----------------------------------------------------


@cli.command("slice")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--pitch", default=None, type=float, help="mm per pixel [default 254/3840].")
@click.option("--thickness", default=0.102, show_default=True, help="Layer height (mm).")
@click.option("--bed", nargs=2, default=(254.0, 203.0), show_default=True, type=float)
@click.option("--dump-png", "dump_png", default=None, type=click.Path(file_okay=False),
              help="Also write 1-bit PNGs of every layer to this directory.")
@click.option("--json", "as_json", is_flag=True)
def slice_cmd(path, pitch, thickness, bed, dump_png, as_json):
    """Slice a watertight mesh into binary layers."""
    from . import mesh as m
    from . import slicing as s

    tri = m.load_mesh(path)
    stack = s.slice_mesh(tri, pitch=pitch or s.DEFAULT_PITCH,
                         thickness=thickness, bed=tuple(bed))
    summary = {
        "layers": stack.num_layers,
        "raster": [stack.rasters.shape[2], stack.rasters.shape[1]],
        "pitch_mm": stack.pitch,
        "thickness_mm": stack.thickness,
        "white_pixels": int(stack.rasters.sum()),
        "source": stack.source,
    }
    if dump_png:
        paths = s.save_layer_pngs(stack, dump_png)
        summary["png_dir"] = dump_png
        summary["png_count"] = len(paths)
    _emit(summary, as_json)


@cli.command("reconstruct")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Output PLY.")
@click.option("--pitch", default=None, type=float)
@click.option("--thickness", default=0.102, show_default=True)
@click.option("--bed", nargs=2, default=(254.0, 203.0), show_default=True, type=float)
@click.option("--json", "as_json", is_flag=True)
def reconstruct_cmd(path, out, pitch, thickness, bed, as_json):
    """Slice a mesh and reconstruct its boundary point cloud (synthetic layers)."""
    from . import cloud as c
    from . import mesh as m
    from . import slicing as s

    tri = m.load_mesh(path)
    stack = s.slice_mesh(tri, pitch=pitch or s.DEFAULT_PITCH,
                         thickness=thickness, bed=tuple(bed))
    pc = s.reconstruct(stack)
    _atomic_write(out, lambda tmp: c.export_ply(pc, tmp))
    _emit({
        "points": len(pc),
        "density_pts_per_mm2": pc.density,
        "layers": stack.num_layers,
        "source": stack.source,
        "out": out,
    }, as_json)


# -- registration ------------------------------------------------------------------


def _load_point_set(path):
    from . import cloud as c
    from . import mesh as m

    if str(path).lower().endswith(".ply"):
        return c.load_ply_points(path).points
    return m.load_mesh(path).vertices


@cli.group()
def register():
    """Rigid alignment."""


@register.command("icp")
@click.option("--source", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--target", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Transform JSON.")
@click.option("--max-iters", default=50, show_default=True)
@click.option("--tol", default=1e-6, show_default=True)
@click.option("--trim", default=None, type=float, help="Keep this fraction of closest pairs.")
@click.option("--json", "as_json", is_flag=True)
def register_icp(source, target, out, max_iters, tol, trim, as_json):
    """Align source points to a target cloud (rotation + translation only)."""
    from . import registration as r

    src = _load_point_set(source)
    tgt = _load_point_set(target)
    transform, info = r.icp_align(src, tgt, max_iters=max_iters, tol=tol, trim=trim)
    _atomic_write(out, lambda tmp: transform.save(tmp, rms=info["rms"],
                                                  iterations=info["iterations"]))
    _emit({"rms": info["rms"], "iterations": info["iterations"], "out": out}, as_json)


@cli.command("c2c")
@click.option("--source", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--target", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Distance CSV.")
@click.option("--icp/--no-icp", "apply_icp", default=False, show_default=True,
              help="Rigidly align the source before measuring.")
@click.option("--json", "as_json", is_flag=True)
def c2c_cmd(source, target, out, apply_icp, as_json):
    """Exact per-point cloud-to-cloud distances with an MAE/STD footer."""
    from . import registration as r

    src = _load_point_set(source)
    tgt = _load_point_set(target)
    if apply_icp:
        transform, _ = r.icp_align(src, tgt)
        src = transform.apply(src)
    stats = r.c2c_distance(src, tgt)

    def write(tmp):
        with open(tmp, "w") as fh:
            fh.write("distance\n")
            for d in stats.distances:
                fh.write(f"{d:.9g}\n")
            fh.write(f"# MAE,{stats.mae:.9g}\n")
            fh.write(f"# STD,{stats.std:.9g}\n")
            fh.write(f"# std_kind,{stats.std_kind}\n")

    _atomic_write(out, write)
    _emit({"points": len(stats.distances), "mae": stats.mae, "std": stats.std,
           "out": out}, as_json)


# -- printability -------------------------------------------------------------------


@cli.group()
def printability():
    """Printability scoring."""


def _resolve_config(path):
    """Relative config names also resolve against $AMPRINT_CONFIG_DIR."""
    if os.path.exists(path):
        return path
    default_dir = os.environ.get("AMPRINT_CONFIG_DIR")
    if default_dir and not os.path.isabs(path):
        candidate = os.path.join(default_dir, path)
        if os.path.exists(candidate):
            return candidate
    raise click.UsageError(f"config file not found: {path}")


@printability.command("score")
@click.option("--config", "config_path", required=True,
              help="Config JSON (also looked up in $AMPRINT_CONFIG_DIR).")
@click.option("--out", default=None, type=click.Path(dir_okay=False), help="Report JSON.")
@click.option("--json", "as_json", is_flag=True)
def printability_score(config_path, out, as_json):
    """Score a configuration JSON; prints the overall probability."""
    from . import scoring

    config_path = _resolve_config(config_path)
    with open(config_path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise AmprintError(f"{config_path}: malformed JSON ({exc})")
    config = scoring.config_from_dict(doc)
    report = scoring.overall_printability(config).to_dict()
    if out:
        def write(tmp):
            with open(tmp, "w") as fh:
                json.dump(report, fh, indent=2)

        _atomic_write(out, write)
    if as_json:
        click.echo(json.dumps(report, indent=2, sort_keys=True))
    else:
        for entry in report["characteristics"]:
            dims = ", ".join(f"{k}={v:g}" for k, v in entry["dimensions"].items())
            click.echo(f"  {entry['kind']} ({dims}): 1-PF = {entry['survival']:.4f}")
        click.echo(f"  global survival 1-PG = {report['global']['survival']:.5f}")
        click.echo(f"printability: {report['overall_percent']:.2f}%")
        for w in report["warnings"]:
            click.echo(f"warning: {w}", err=True)


@printability.command("fit-c")
@click.option("--w", "w_value", required=True, type=float, help="Critical value.")
@click.option("--direction", type=click.Choice(["decreasing", "increasing"]),
              default="decreasing", show_default=True)
@click.option("--json", "as_json", is_flag=True)
def printability_fit_c(w_value, direction, as_json):
    """Fit the sigmoid steepness coefficient for a critical value."""
    from . import scoring

    c = scoring.fit_coefficient(w_value, direction)
    _emit({"w": w_value, "direction": direction, "c": c}, as_json)


# -- service --------------------------------------------------------------------


@cli.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8099, show_default=True)
def serve(host, port):
    """Run the HTTP scoring service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port, log_level="info")


def main(argv=None):
    try:
        cli(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.UsageError as exc:
        exc.show()
        return 2
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code if exc.exit_code else 2
    except AmprintError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
