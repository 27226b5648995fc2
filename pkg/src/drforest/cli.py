"""Command-line front end.

Every command writes a ``*.manifest.json`` next to its outputs holding the
command name, the resolved options, SHA-256 digests of input files and the
package version.  Failures print a single ``error: <Code>: <message>`` line on
stderr and exit nonzero.
"""
from __future__ import annotations

import hashlib
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .backscoring import BackscorerConfig
from .core import DimensionMismatch, DrfError, ValidationError, load_matrix_csv, write_matrix_csv
from .forest import ForestConfig
from .metrics import error_vectors_projection, evaluate
from .pipeline import (
    PipelineConfig,
    fit as fit_pipeline,
    fit_krf_baseline,
    fit_rf_baseline,
    knn_predict,
    krf_predict,
    load_model,
    output_gram,
    predict_batch,
    rf_mean_predict,
    save_model,
)
from .simulate import DEFAULT_NOISE_SD, gen_swiss_roll


class BadDimensions(DrfError):
    code = "BadDimensions"


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _manifest(path, command: str, options: dict, inputs: dict, outputs: list, config=None, seed=None) -> None:
    doc = {
        "command": command,
        "tool_version": __version__,
        "options": {k: (str(v) if isinstance(v, Path) else v) for k, v in options.items()},
        "inputs": {name: {"path": str(p), "sha256": _sha256(p)} for name, p in inputs.items() if p is not None},
        "outputs": [str(p) for p in outputs],
    }
    if config is not None:
        doc["config"] = config
    if seed is not None:
        doc["seed"] = seed
    _write_json(path, doc)


def _sidecar(path: Path, suffix: str) -> Path:
    return path.with_name(path.stem + suffix)


def _split_columns(M: np.ndarray, group_column):
    if group_column is None:
        return M, None
    if not 0 <= group_column < M.shape[1]:
        raise DimensionMismatch(f"group column {group_column} out of range for {M.shape[1]} columns")
    return np.delete(M, group_column, axis=1), M[:, group_column]


def holdout_split(n: int, fraction: float, seed: int, groups=None):
    """Random train/test index split; whole groups go to one side when given."""
    rng = np.random.default_rng(seed)
    if groups is None:
        perm = rng.permutation(n)
        n_test = int(round(fraction * n))
        test = np.sort(perm[:n_test])
    else:
        labels = np.unique(groups)
        perm = rng.permutation(len(labels))
        n_test = int(round(fraction * len(labels)))
        test = np.sort(np.flatnonzero(np.isin(groups, labels[perm[:n_test]])))
    train = np.setdiff1d(np.arange(n), test)
    if len(train) == 0:
        raise ValidationError("holdout leaves no training samples")
    return train, test


def _load_split(path):
    d = json.loads(Path(path).read_text())
    return np.asarray(d["train"], dtype=np.int64), np.asarray(d["test"], dtype=np.int64), d.get("group_column")


def _rows(M, idx):
    return None if M is None else M[idx]


threads_option = click.option("--threads", type=click.IntRange(min=1), default=1, envvar="DRF_THREADS",
                              show_default=True, help="Worker threads (env DRF_THREADS).")


@click.group()
@click.version_option(__version__)
def cli():
    """Distance random forest regression for manifold-valued responses."""


@cli.command("simulate")
@click.option("--n", "n", type=click.IntRange(min=1), required=True)
@click.option("--noise-sd", type=click.FloatRange(min=0.0), default=DEFAULT_NOISE_SD, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path), required=True)
def cmd_simulate(n, noise_sd, seed, out_dir):
    """Write a swiss-roll dataset (inputs, responses, latents)."""
    out_dir.mkdir(parents=True, exist_ok=True)
    s = gen_swiss_roll(n, noise_sd=noise_sd, seed=seed)
    outs = [out_dir / "inputs.csv", out_dir / "responses.csv", out_dir / "latents.csv"]
    write_matrix_csv(outs[0], s.X, [f"x{i}" for i in range(1, 7)])
    write_matrix_csv(outs[1], s.Y, ["y1", "y2", "y3"])
    write_matrix_csv(outs[2], s.latents, ["t", "u"])
    _manifest(out_dir / "manifest.json", "simulate", {"n": n, "noise_sd": noise_sd, "seed": seed}, {}, outs,
              seed=seed)


@cli.command("split-images")
@click.option("--images", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--rows", type=click.IntRange(min=1), required=True)
@click.option("--cols", type=click.IntRange(min=1), required=True)
@click.option("--label-column", type=int, default=None, help="Column holding a class label; written to labels.csv.")
@click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path), required=True)
def cmd_split_images(images, rows, cols, label_column, out_dir):
    """Split row-major images into upper-half inputs and lower-half responses."""
    if rows % 2:
        raise BadDimensions(f"image row count must be even, got {rows}")
    M = load_matrix_csv(images)
    M, labels = _split_columns(M, label_column)
    if M.shape[1] != rows * cols:
        raise BadDimensions(f"{images}: {M.shape[1]} pixel columns, expected rows*cols = {rows * cols}")
    half = rows // 2 * cols
    out_dir.mkdir(parents=True, exist_ok=True)
    outs = [out_dir / "inputs.csv", out_dir / "responses.csv"]
    write_matrix_csv(outs[0], M[:, :half], [f"p{i}" for i in range(half)])
    write_matrix_csv(outs[1], M[:, half:], [f"p{i}" for i in range(half, 2 * half)])
    if labels is not None:
        outs.append(out_dir / "labels.csv")
        write_matrix_csv(outs[-1], labels, ["label"])
    _manifest(out_dir / "manifest.json", "split-images",
              {"rows": rows, "cols": cols, "label_column": label_column}, {"images": images}, outs)


def _prepare_training(inputs, responses, group_column, holdout_fraction, split_seed, split_out):
    X, groups = _split_columns(load_matrix_csv(inputs), group_column)
    Y = load_matrix_csv(responses)
    if Y.shape[0] != X.shape[0]:
        raise DimensionMismatch(f"{responses}: {Y.shape[0]} rows, inputs have {X.shape[0]}")
    train, test = holdout_split(X.shape[0], holdout_fraction, split_seed, groups)
    _write_json(split_out, {"train": train.tolist(), "test": test.tolist(), "group_column": group_column,
                            "holdout_fraction": holdout_fraction, "split_seed": split_seed})
    return X, Y, train, test


@cli.command("fit")
@click.option("--inputs", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--responses", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True,
              help="Training responses; always needed for backscoring.")
@click.option("--distances", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None,
              help="Precomputed N x N response distances (implies --metric precomputed).")
@click.option("--metric", type=click.Choice(["euclidean", "isomap", "precomputed"]), default=None)
@click.option("--isomap-k", type=click.IntRange(min=1), default=7, show_default=True)
@click.option("--trees", type=click.IntRange(min=1), default=100, show_default=True)
@click.option("--mtry", type=click.IntRange(min=1), default=None, help="Default: max(1, p // 3).")
@click.option("--min-leaf", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--embed-dim", type=click.IntRange(min=1), default=2, show_default=True)
@click.option("--sigma-g", type=float, default=1.0, show_default=True)
@click.option("--gamma-g", type=float, default=1.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--model-out", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option("--holdout-fraction", type=click.FloatRange(0.0, 1.0, max_open=True), default=0.0, show_default=True)
@click.option("--split-seed", type=int, default=0, show_default=True)
@click.option("--group-column", type=int, default=None,
              help="Input column with group ids; groups are never split across train/test. Dropped from features.")
@threads_option
def cmd_fit(inputs, responses, distances, metric, isomap_k, trees, mtry, min_leaf, embed_dim, sigma_g, gamma_g,
            seed, model_out, holdout_fraction, split_seed, group_column, threads):
    """Fit a distance-forest model and save it."""
    if metric is None:
        metric = "precomputed" if distances is not None else "isomap"
    if (metric == "precomputed") != (distances is not None):
        raise click.UsageError("--distances is required with, and only with, --metric precomputed")
    split_path = _sidecar(model_out, ".split.json")
    X, Y, train, _ = _prepare_training(inputs, responses, group_column, holdout_fraction, split_seed, split_path)
    D = None
    if distances is not None:
        D = load_matrix_csv(distances)
        if D.shape != (X.shape[0], X.shape[0]):
            raise DimensionMismatch(f"{distances}: expected {X.shape[0]}x{X.shape[0]}, got {D.shape[0]}x{D.shape[1]}")
        D = D[np.ix_(train, train)]
    config = PipelineConfig(
        forest=ForestConfig(n_trees=trees, mtry=mtry, min_leaf=min_leaf, seed=seed),
        metric=metric, isomap_k=isomap_k, embedding_dim=embed_dim,
        backscore=BackscorerConfig(sigma_g=sigma_g, gamma_g=gamma_g),
    )
    model = fit_pipeline(X[train], Y[train], config, D=D, n_jobs=threads)
    save_model(model, model_out)
    opts = dict(metric=metric, isomap_k=isomap_k, trees=trees, mtry=mtry, min_leaf=min_leaf, embed_dim=embed_dim,
                sigma_g=sigma_g, gamma_g=gamma_g, seed=seed, holdout_fraction=holdout_fraction,
                split_seed=split_seed, group_column=group_column)
    _manifest(_sidecar(model_out, ".manifest.json"), "fit", opts,
              {"inputs": inputs, "responses": responses, "distances": distances},
              [model_out, split_path], config=model.config.to_dict(), seed=seed)


@cli.command("predict")
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--inputs", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option("--split", "split_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None,
              help="Split file from fit; only its test rows are predicted.")
@threads_option
def cmd_predict(model_path, inputs, out, split_path, threads):
    """Predict responses for every (or every held-out) input row."""
    model = load_model(model_path)
    M = load_matrix_csv(inputs)
    if split_path is not None:
        _, test, group_column = _load_split(split_path)
        M = _split_columns(M, group_column)[0][test]
    if M.shape[1] != model.n_features:
        raise DimensionMismatch(f"{inputs}: model expects p = {model.n_features} input columns, got {M.shape[1]}")
    P = predict_batch(model, M, n_jobs=threads)
    write_matrix_csv(out, P, [f"y{i}" for i in range(1, P.shape[1] + 1)])
    _manifest(_sidecar(out, ".manifest.json"), "predict", {"threads": threads},
              {"model": model_path, "inputs": inputs, "split": split_path}, [out],
              config=model.config.to_dict(), seed=model.config.forest.seed)


@cli.command("baseline")
@click.argument("method", type=click.Choice(["knn", "rf", "krf"]))
@click.option("--inputs", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--responses", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--split", "split_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True,
              help="Split file from fit: train rows fit the baseline, test rows are predicted.")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option("--k", type=click.IntRange(min=1), default=5, show_default=True)
@click.option("--trees", type=click.IntRange(min=1), default=100, show_default=True)
@click.option("--mtry", type=click.IntRange(min=1), default=None)
@click.option("--min-leaf", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--sigma", type=float, default=2.5, show_default=True, help="kRF output-kernel bandwidth.")
@click.option("--seed", type=int, default=0, show_default=True)
@threads_option
def cmd_baseline(method, inputs, responses, split_path, out, k, trees, mtry, min_leaf, sigma, seed, threads):
    """Reference predictors on the same split: k-NN, mean-leaf RF or output-kernel RF."""
    train, test, group_column = _load_split(split_path)
    X = _split_columns(load_matrix_csv(inputs), group_column)[0]
    Y = load_matrix_csv(responses)
    Xtr, Ytr = X[train], Y[train]
    fc = ForestConfig(n_trees=trees, mtry=mtry, min_leaf=min_leaf, seed=seed)
    if method == "knn":
        P = [knn_predict(Xtr, Ytr, x, k) for x in X[test]]
    elif method == "rf":
        forest = fit_rf_baseline(Xtr, Ytr, fc, n_jobs=threads)
        P = [rf_mean_predict(forest, Ytr, x) for x in X[test]]
    else:
        forest = fit_krf_baseline(Xtr, Ytr, fc, sigma, n_jobs=threads)
        G = output_gram(Ytr, sigma)
        P = [krf_predict(forest, Ytr, x, sigma, gram=G) for x in X[test]]
    P = np.array(P).reshape(len(test), Y.shape[1])
    write_matrix_csv(out, P, [f"y{i}" for i in range(1, P.shape[1] + 1)])
    opts = dict(method=method, k=k, trees=trees, mtry=mtry, min_leaf=min_leaf, sigma=sigma, seed=seed)
    _manifest(_sidecar(out, ".manifest.json"), "baseline", opts,
              {"inputs": inputs, "responses": responses, "split": split_path}, [out], seed=seed)


@cli.command("eval")
@click.option("--pred", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--truth", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--latents", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None,
              help="Swiss-roll latents (t, u); adds radial errors and the y1-y3 error projection.")
@click.option("--labels", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None)
@click.option("--train-labels", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None)
@click.option("--train-responses", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None)
@click.option("--split", "split_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None,
              help="Split file: truth/latents/labels are full files, subset to test rows; train files to train rows.")
@click.option("--report-out", type=click.Path(dir_okay=False, path_type=Path), required=True)
def cmd_eval(pred, truth, latents, labels, train_labels, train_responses, split_path, report_out):
    """Score predictions: EMSE, radial errors, training-match rate."""
    P = load_matrix_csv(pred)
    T = load_matrix_csv(truth)
    L = load_matrix_csv(latents) if latents is not None else None
    lab = load_matrix_csv(labels)[:, 0] if labels is not None else None
    Ytr = load_matrix_csv(train_responses) if train_responses is not None else None
    lab_tr = load_matrix_csv(train_labels)[:, 0] if train_labels is not None else None
    if split_path is not None:
        train, test, _ = _load_split(split_path)
        if lab_tr is None:
            lab_tr = lab
        T, L, lab = T[test], _rows(L, test), _rows(lab, test)
        Ytr, lab_tr = _rows(Ytr, train), _rows(lab_tr, train)
    if lab is not None and (Ytr is None or lab_tr is None):
        raise click.UsageError("--labels needs --train-responses and --train-labels (or --split)")
    rep = evaluate(T, P, t_true=None if L is None else L[:, 0], Y_train=Ytr, labels_train=lab_tr, labels_true=lab)
    outs = [report_out, _sidecar(report_out, ".errors.csv")]
    _write_json(report_out, rep.scalars())
    q = P.shape[1]
    write_matrix_csv(outs[1], rep.per_sample_errors, [f"err{i}" for i in range(1, q + 1)])
    if L is not None and q >= 3:
        outs.append(_sidecar(report_out, ".projection.csv"))
        write_matrix_csv(outs[-1], error_vectors_projection(T, P, (0, 2)), ["y1", "y3", "err1", "err3"])
    _manifest(_sidecar(report_out, ".manifest.json"), "eval", {},
              {"pred": pred, "truth": truth, "latents": latents, "labels": labels, "train_labels": train_labels,
               "train_responses": train_responses, "split": split_path}, outs)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="drforest", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("error: Aborted: interrupted", err=True)
        return 1
    except click.ClickException as exc:
        code = "UsageError" if isinstance(exc, click.UsageError) else "ClickError"
        click.echo(f"error: {code}: {' '.join(exc.format_message().split())}", err=True)
        return exc.exit_code
    except DrfError as exc:
        click.echo(f"error: {exc.code}: {' '.join(str(exc).split())}", err=True)
        return 1
    except OSError as exc:
        click.echo(f"error: IoError: {exc}", err=True)
        return 1
    except (ValueError, KeyError) as exc:
        click.echo(f"error: InvalidInput: {' '.join(str(exc).split())}", err=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
