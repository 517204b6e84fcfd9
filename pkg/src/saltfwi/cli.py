"""Command-line entry points.

One binary with subcommands: generate synthetic truth/data, run an
inversion, fit a level-set to a mask, compute comparison metrics, and
export gridded diagnostic fields.  Configuration is a JSON document plus
`--set key.path=value` overrides.

Exit codes: 0 success, 2 config error, 3 compute failure, 4 I/O error.
"""

import argparse
import csv
import json
import sys
import traceback
from pathlib import Path

import numpy as np

from . import containers
from .config import (background_from_config, grid_from_config, load_config,
                     shape_from_config)
from .errors import ConfigError, SaltFwiError
from .helmholtz import PmlConfig
from .inversion import (InversionConfig, achievable_erf, classic_fwi, erf,
                        joint_invert, pls_fwi_multiscale, rre)
from .levelset import HeavisideConfig, fit_shape, heaviside, init_levelset, intersection_over_union
from .model import linear_background, make_salt_model
from .optimize import OptimizeConfig
from .rbf import RbfSpec, assemble_kernel, build_node_grid
from .survey import add_noise, build_acquisition, forward_model

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_COMPUTE = 3
EXIT_IO = 4


def _out_dir(cfg) -> Path:
    out = Path(cfg["paths"]["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _pml(cfg) -> PmlConfig:
    return PmlConfig(width=cfg["pml"]["width"], reflection=cfg["pml"]["reflection"])


def _acquisition(cfg, grid):
    a = cfg["acquisition"]
    return build_acquisition(grid, a["n_sources"], a["n_receivers"],
                             receiver_depth=a["receiver_depth"],
                             f_min=a["f_min"], f_max=a["f_max"], f_step=a["f_step"],
                             n_bands=a["n_bands"], freqs_per_band=a["freqs_per_band"])


def _inversion_config(cfg) -> InversionConfig:
    inv = cfg["inversion"]
    return InversionConfig(
        iters_per_band=inv["iters_per_band"], memory=inv["memory"], gtol=inv["gtol"],
        v_bounds=tuple(inv["v_bounds"]), f_peak=cfg["weighting"]["f_peak"],
        pml=_pml(cfg), heaviside_kind=cfg["levelset"]["kind"],
        kappa0=cfg["levelset"]["kappa"], b_interval=tuple(inv["b_interval"]),
        bisection_tol=inv["bisection_tol"], v_top=cfg["background"]["v_top"],
        threads=cfg["threads"],
    )


def _rbf_setup(cfg, grid):
    r = cfg["rbf"]
    nodes = build_node_grid(grid, spacing_ratio=r["spacing_ratio"], padding=r["padding"])
    spec = RbfSpec.for_node_grid(r["family"], nodes, gamma=r["gamma"])
    return nodes, assemble_kernel(grid, nodes, spec)


def _init_alpha(cfg, grid, nodes):
    init = cfg["levelset"]["init"]
    center = init["center"]
    if center is None:
        x_min, x_max, z_min, z_max = grid.extent
        center = (0.5 * (x_min + x_max), 0.5 * (z_min + z_max))
    radius = init["radius"] if init["radius"] is not None else 2.0 * nodes.h_r
    return init_levelset(nodes, center, radius, inside=init["inside"],
                         outside=init["outside"])


def _write_manifest(path, manifest):
    with open(path, "w") as f:
        json.dump(manifest, f, sort_keys=True, indent=2)
        f.write("\n")


def cmd_generate(cfg) -> int:
    grid = grid_from_config(cfg)
    out = _out_dir(cfg)
    background = linear_background(grid, background_from_config(cfg))
    if "salt" in cfg and "shape" in cfg.get("salt", {}):
        shape = shape_from_config(cfg["salt"]["shape"], grid)
        model = make_salt_model(grid, background, shape, v_salt=cfg["salt"]["velocity"])
        truth = model.m
        mask = model.indicator.astype(float)
    else:
        truth = background
        mask = None

    containers.write_mod(out / cfg["paths"]["truth_model"], truth, grid=grid,
                         kind="model", units="s^2/m^2")
    containers.write_mod(out / cfg["paths"]["start_model"], background, grid=grid,
                         kind="model", units="s^2/m^2")
    if mask is not None:
        containers.write_mod(out / "truth.mask.mod", mask, grid=grid, kind="mask",
                             units="indicator")

    acq = _acquisition(cfg, grid)
    f_peak = cfg["weighting"]["f_peak"]
    cube = forward_model(grid, truth, acq, f_peak=f_peak, pml=_pml(cfg),
                         threads=cfg["threads"])
    containers.write_fwd(out / cfg["paths"]["data"], cube, f_peak,
                         provenance={"noise": None})
    written = [cfg["paths"]["truth_model"], cfg["paths"]["start_model"], cfg["paths"]["data"]]
    if "noise" in cfg:
        snr = cfg["noise"]["snr_db"]
        seed = cfg["noise"].get("seed", cfg["seed"])
        noisy = add_noise(cube, snr, seed)
        noisy_name = Path(cfg["paths"]["data"]).stem + "_noisy.fwd"
        containers.write_fwd(out / noisy_name, noisy, f_peak,
                             provenance={"noise": {"snr_db": snr, "seed": seed}})
        written.append(noisy_name)
    manifest = {
        "command": "generate",
        "config": cfg,
        "outputs": {name: containers.sha256_file(out / name) for name in written},
    }
    _write_manifest(out / "generate.manifest.json", manifest)
    print(f"wrote {', '.join(written)} in {out}")
    return EXIT_OK


def cmd_invert(cfg) -> int:
    grid = grid_from_config(cfg)
    out = _out_dir(cfg)
    mode = cfg["inversion"]["mode"]
    data_path = out / cfg["paths"]["data"]
    d_obs, header = containers.read_fwd(data_path)
    acq = d_obs.acquisition
    inv_cfg = _inversion_config(cfg)
    bands = cfg["inversion"]["bands"] or acq.bands
    background = linear_background(grid, background_from_config(cfg))
    inputs = {str(data_path): containers.sha256_file(data_path)}

    manifest = {"command": "invert", "mode": mode, "config": cfg, "inputs": inputs,
                "status": "running"}
    manifest_path = out / "invert.manifest.json"
    try:
        if mode == "fwi":
            run = classic_fwi(grid, background, acq, d_obs, bands=bands, cfg=inv_cfg)
        else:
            nodes, kernel = _rbf_setup(cfg, grid)
            alpha0 = _init_alpha(cfg, grid, nodes)
            m1 = 1.0 / cfg["salt"]["velocity"] ** 2
            if mode == "pls":
                run = pls_fwi_multiscale(grid, alpha0, background, m1, kernel, acq,
                                         d_obs, bands=bands, cfg=inv_cfg)
            else:
                run = joint_invert(grid, alpha0, tuple(cfg["inversion"]["b_interval"]),
                                   m1, kernel, acq, d_obs, bands=bands, cfg=inv_cfg)
    except SaltFwiError as exc:
        manifest["status"] = f"failed: {exc}"
        _write_manifest(manifest_path, manifest)
        raise

    model_name = f"recon_{mode.replace('-', '_')}.mod"
    containers.write_mod(out / model_name, run.final_model, grid=grid, kind="model",
                         units="s^2/m^2")
    outputs = {model_name: containers.sha256_file(out / model_name)}
    if run.final_alpha is not None:
        containers.write_mod(out / cfg["paths"]["alpha"], run.final_alpha, kind="alpha")
        outputs[cfg["paths"]["alpha"]] = containers.sha256_file(out / cfg["paths"]["alpha"])
    for bi, hist in enumerate(run.band_histories):
        name = f"history_band{bi}.csv"
        hist.to_csv(out / name)
        outputs[name] = containers.sha256_file(out / name)

    manifest.update({
        "status": "ok",
        "outputs": outputs,
        "bands": [list(b) for b in bands],
        "notes": run.notes,
    })
    if run.kappa_per_band is not None:
        manifest["kappa_per_band"] = run.kappa_per_band
    if run.b_per_band is not None:
        manifest["b_per_band"] = run.b_per_band
        manifest["b_flags"] = run.b_flags
    _write_manifest(manifest_path, manifest)
    print(f"{mode} inversion done; model in {out / model_name}")
    return EXIT_OK


def cmd_fit_shape(cfg) -> int:
    grid = grid_from_config(cfg)
    out = _out_dir(cfg)
    shape = shape_from_config(cfg["fit_shape"]["mask"], grid)
    mask = shape.contains(grid)
    nodes, kernel = _rbf_setup(cfg, grid)
    hs = HeavisideConfig(kind=cfg["levelset"]["kind"],
                         epsilon=cfg["fit_shape"]["epsilon"],
                         kappa=cfg["levelset"]["kappa"])
    alpha, fitted, hist = fit_shape(
        mask, kernel, hs, adaptive=cfg["fit_shape"]["adaptive"],
        opt=OptimizeConfig(max_iters=cfg["fit_shape"]["max_iters"]),
    )
    iou = intersection_over_union(fitted, mask)
    containers.write_mod(out / cfg["paths"]["alpha"], alpha, kind="alpha")
    containers.write_mod(out / "fitted.mask.mod", fitted.astype(float), grid=grid,
                         kind="mask", units="indicator")
    hist.to_csv(out / "fit_history.csv")
    _write_manifest(out / "fit.manifest.json", {
        "command": "fit-shape", "config": cfg, "iou": iou, "status": hist.status,
        "outputs": {name: containers.sha256_file(out / name)
                    for name in [cfg["paths"]["alpha"], "fitted.mask.mod", "fit_history.csv"]},
    })
    print(f"fit IoU = {iou:.4f} ({hist.status})")
    return EXIT_OK


def cmd_metrics(cfg) -> int:
    grid = grid_from_config(cfg)
    out = _out_dir(cfg)
    paths = cfg["paths"]
    missing = [k for k in ("truth_model", "start_model", "data")
               if not (out / paths[k]).exists()]
    if missing:
        raise ConfigError(f"missing inputs for metrics: {', '.join(missing)}")
    truth, _ = containers.read_mod(out / paths["truth_model"])
    start, _ = containers.read_mod(out / paths["start_model"])
    d_obs, header = containers.read_fwd(out / paths["data"])
    f_peak = header["weighting"]["f_peak"]
    pml = _pml(cfg)

    row = {"model": cfg.get("salt", {}).get("shape", {}).get("name", "custom")}
    for key, col in (("recon_fwi", "fwi"), ("recon_pls", "pls")):
        path = out / paths[key]
        if path.exists():
            recon, _ = containers.read_mod(path)
            row[f"erf_{col}"] = erf(grid, recon, start, d_obs.acquisition, d_obs,
                                    f_peak=f_peak, pml=pml)
            row[f"rre_{col}"] = rre(recon, truth, start)
        else:
            row[f"erf_{col}"] = ""
            row[f"rre_{col}"] = ""
    row["erf_achievable"] = achievable_erf(grid, truth, start, d_obs.acquisition,
                                           d_obs, f_peak=f_peak, pml=pml)
    columns = ["model", "erf_fwi", "erf_pls", "erf_achievable", "rre_fwi", "rre_pls"]
    with open(out / "metrics.csv", "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=columns)
        writer.writeheader()
        writer.writerow(row)
    print(",".join(str(row[c]) for c in columns))
    return EXIT_OK


def cmd_export(cfg) -> int:
    grid = grid_from_config(cfg)
    out = _out_dir(cfg)
    alpha, _ = containers.read_mod(out / cfg["paths"]["alpha"])
    nodes, kernel = _rbf_setup(cfg, grid)
    if alpha.size != kernel.n_weights:
        raise ConfigError(
            f"alpha length {alpha.size} does not match the RBF layout ({kernel.n_weights})"
        )
    phi = kernel.dot(alpha.ravel())
    eps = float(np.ptp(phi)) * 0.5 * cfg["levelset"]["kappa"]
    hs = HeavisideConfig(kind=cfg["levelset"]["kind"], epsilon=eps,
                         kappa=cfg["levelset"]["kappa"])
    h_field = heaviside(hs, phi)
    gx, gz = np.gradient(phi, grid.h)
    grad_mag = np.hypot(gx, gz)
    background = linear_background(grid, background_from_config(cfg))
    m1 = 1.0 / cfg["salt"]["velocity"] ** 2
    sharp = heaviside(HeavisideConfig(epsilon=0.0), phi)
    final = background * (1 - sharp) + m1 * sharp

    for name, values, units in (
        ("export_final.mod", final, "s^2/m^2"),
        ("export_hfield.mod", h_field, "indicator"),
        ("export_phi.mod", phi, "levelset"),
        ("export_gradphi.mod", grad_mag, "levelset/m"),
    ):
        containers.write_mod(out / name, values, grid=grid, kind="field", units=units)
    print(f"exported final/h/phi/|grad phi| fields to {out}")
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "invert": cmd_invert,
    "fit-shape": cmd_fit_shape,
    "metrics": cmd_metrics,
    "export": cmd_export,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="saltfwi",
        description="salt-body reconstruction by level-set full-waveform inversion",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("-c", "--config", required=True, help="JSON configuration file")
        p.add_argument("--set", action="append", default=[], metavar="KEY.PATH=VALUE",
                       help="override a config entry (JSON-parsed value)")
        p.add_argument("--threads", type=int, default=None,
                       help="cap worker parallelism")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, overrides=args.set)
        if args.threads is not None:
            cfg["threads"] = args.threads
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SaltFwiError as exc:
        print(f"compute error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except Exception:
        traceback.print_exc()
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
