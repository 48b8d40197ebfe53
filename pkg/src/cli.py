import argparse
import json
import os
import sys
import time
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from rich.table import Table
from tqdm import tqdm

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.config import MODEL_CHOICES, SAMPLER_CHOICES, TASK_CHOICES, RunConfig, load_run_config
from src.console import console, setup_logging
from src.evaluate import cluster_embeddings, link_prediction_report
from src.graph import (
    Graph,
    NodeFeatures,
    graph_stats,
    load_edge_list,
    load_features,
    load_labels,
    split_edges,
    write_edge_list,
    write_labels,
)
from src.model import save_checkpoint
from src.params import LOSS_KINDS, SbmSpec, ThresholdParams
from src.sampler import threshold_subgraph_size
from src.synth import generate_sbm
from src.train import TrainResult, stream_seed, train

TIMING_KEYS = ("train_seconds", "sample_seconds", "iteration_seconds")


def load_inputs(cfg: RunConfig) -> Tuple[Graph, NodeFeatures, Optional[np.ndarray]]:
    g = load_edge_list(cfg.input)
    features = load_features(cfg.features, g.n) if cfg.features else NodeFeatures.identity(g.n)
    labels = load_labels(cfg.labels, g.n) if cfg.labels else None
    return g, features, labels


def run_link_prediction(g: Graph, features: NodeFeatures, cfg: RunConfig, progress: bool = False):
    """Hold out edges, train on the rest, score held-out pairs."""
    split = split_edges(g, cfg.val_frac, cfg.test_frac, seed=stream_seed(cfg.seed, "split"))
    tc = cfg.to_train_config()
    tc.progress = progress
    result = train(split.train_graph, features, tc)
    return result, link_prediction_report(result.embeddings, split)


def run_clustering(g: Graph, features: NodeFeatures, labels: Optional[np.ndarray], cfg: RunConfig,
                   progress: bool = False):
    """Train on the complete graph, then k-means on the embeddings."""
    if labels is None and cfg.clusters is None:
        raise ValueError("--task cluster nécessite --labels ou --clusters")
    tc = cfg.to_train_config()
    tc.progress = progress
    result = train(g, features, tc)
    seed = stream_seed(cfg.seed, "cluster")
    clustering, ami = cluster_embeddings(result.embeddings, labels, k=cfg.clusters, seed=seed)
    return result, clustering, ami


def write_embeddings(g: Graph, z: np.ndarray, path: str) -> None:
    df = pd.DataFrame(z, columns=[f"dim_{k}" for k in range(z.shape[1])])
    df.insert(0, "node", g.node_ids)
    df.to_csv(path, index=False)


def build_metrics(cfg: RunConfig, primary: TrainResult, report: Optional[Dict[str, Any]],
                  ami: Optional[float], cluster_result: Optional[TrainResult]) -> Dict[str, Any]:
    report = report or {}
    metrics = {
        "auc": report.get("auc"),
        "ap": report.get("ap"),
        "val_auc": report.get("val_auc"),
        "val_ap": report.get("val_ap"),
        "ami": ami,
        "loss_history": primary.loss_history,
        "train_seconds": primary.train_seconds,
        "sample_seconds": primary.sample_seconds,
        "iteration_seconds": primary.iteration_seconds,
        "n_s_used": primary.n_s_used,
        "config": cfg.to_dict(),
    }
    if cluster_result is not None and cluster_result is not primary:
        metrics["cluster_loss_history"] = cluster_result.loss_history
    return metrics


def _planned_size(g: Graph, cfg: RunConfig) -> str:
    if cfg.sampler not in ("uniform", "degree", "core"):
        return "-"
    if cfg.subgraph_size == "auto":
        return f"auto ({threshold_subgraph_size(g.n, cfg.threshold)})"
    return str(cfg.subgraph_size)


def cmd_train(args) -> int:
    cfg = RunConfig.from_mapping(vars(args))
    g, features, labels = load_inputs(cfg)
    cfg = cfg.resolve(g.n)
    console.print(f"📂 Graphe chargé: {g.n} nœuds, {g.m} arêtes")
    console.print(
        f"⚙️  Modèle {cfg.model}, échantillonneur {cfg.sampler}, "
        f"n_S={_planned_size(g, cfg)}, "
        f"{cfg.iterations} itérations"
    )

    report = None
    ami = None
    lp_result = cluster_result = None
    if cfg.task in ("lp", "both"):
        lp_result, report = run_link_prediction(g, features, cfg, progress=args.progress)
        console.print(f"🔗 Prédiction de liens: AUC={_fmt(report['auc'])} AP={_fmt(report['ap'])}")
    if cfg.task in ("cluster", "both"):
        cluster_result, _, ami = run_clustering(g, features, labels, cfg, progress=args.progress)
        console.print(f"🧩 Clustering: AMI={_fmt(ami)}")

    primary = lp_result or cluster_result
    exported = cluster_result or lp_result
    os.makedirs(cfg.out_dir, exist_ok=True)
    write_embeddings(g, exported.embeddings, os.path.join(cfg.out_dir, "embeddings.csv"))
    metrics = build_metrics(cfg, primary, report, ami, cluster_result)
    with open(os.path.join(cfg.out_dir, "metrics.json"), "w", encoding="utf-8") as f:
        json.dump(metrics, f, indent=2)
    save_checkpoint(exported.model, os.path.join(cfg.out_dir, "model.npz"), config=cfg.to_dict())
    cfg.save(os.path.join(cfg.out_dir, "config.yaml"))
    console.print(f"✅ Résultats exportés dans {cfg.out_dir}/")
    return 0


def cmd_threshold(args) -> int:
    params = ThresholdParams(gamma=args.gamma, confidence_alpha=args.confidence, epsilon=args.epsilon,
                             loss_kind=args.loss)
    print(threshold_subgraph_size(args.n, params))
    return 0


def cmd_sbm(args) -> int:
    spec = SbmSpec(num_communities=args.communities, community_size=args.community_size,
                   p_in=args.p_in, p_out=args.p_out, seed=args.seed)
    g, labels = generate_sbm(spec)
    parent = os.path.dirname(args.out_prefix)
    if parent:
        os.makedirs(parent, exist_ok=True)
    write_edge_list(g, f"{args.out_prefix}.edges")
    write_labels(g, labels, f"{args.out_prefix}.labels")
    isolated = int((np.diff(g.row_offsets) == 0).sum())
    if isolated:
        console.print(f"⚠️  {isolated} nœuds isolés absents du fichier d'arêtes")
    console.print(f"✅ Exporté: {args.out_prefix}.edges, {args.out_prefix}.labels")
    return 0


def cmd_stats(args) -> int:
    g = load_edge_list(args.input)
    print(json.dumps(graph_stats(g)))
    return 0


def _fmt(value: Optional[float]) -> str:
    return "-" if value is None else f"{100.0 * value:.2f}"


def _mean_std(values: List[float]) -> str:
    values = [v for v in values if v is not None]
    if not values:
        return "-"
    return f"{100.0 * np.mean(values):.2f} ± {100.0 * np.std(values):.2f}"


def cmd_bench(args) -> int:
    """Link prediction over several seeds for each sampler, side by side."""
    base = RunConfig.from_mapping(vars(args))
    g, features, _ = load_inputs(base)
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    for s in strategies:
        if s not in SAMPLER_CHOICES:
            raise ValueError(f"échantillonneur inconnu: {s!r} (attendu: {', '.join(SAMPLER_CHOICES)})")
    if args.runs < 1:
        raise ValueError(f"--runs doit être >= 1, reçu {args.runs}")
    console.print(f"📂 Graphe chargé: {g.n} nœuds, {g.m} arêtes")

    rows: Dict[str, Dict[str, Any]] = {}
    jobs = [(s, r) for s in strategies for r in range(args.runs)]
    for sampler, r in tqdm(jobs, desc="bench", unit="run", disable=not args.progress):
        cfg = RunConfig.from_mapping({**vars(args), "sampler": sampler, "seed": base.seed + r}).resolve(g.n)
        result, report = run_link_prediction(g, features, cfg)
        row = rows.setdefault(sampler, {"n_s": result.n_s_used, "auc": [], "ap": [], "sample_seconds": [],
                                        "train_seconds": [], "iteration_seconds": []})
        row["auc"].append(report["auc"])
        row["ap"].append(report["ap"])
        row["sample_seconds"].append(result.sample_seconds)
        row["train_seconds"].append(result.train_seconds)
        row["iteration_seconds"].append(result.iteration_seconds)

    full_total = None
    if "none" in rows:
        full_total = float(np.mean(rows["none"]["sample_seconds"]) + np.mean(rows["none"]["train_seconds"]))

    table = Table(title=f"Banc d'essai ({args.runs} graines)")
    for col in ("Échantillonneur", "n_S", "AUC (%)", "AP (%)", "Distribution (s)", "Entraînement (s)",
                "Total (s)", "Accélération"):
        table.add_column(col, justify="right" if col != "Échantillonneur" else "left")
    summary = {}
    for sampler, row in rows.items():
        total = float(np.mean(row["sample_seconds"]) + np.mean(row["train_seconds"]))
        speedup = full_total / total if full_total is not None and total > 0 else None
        summary[sampler] = {**row, "total_seconds": total, "speedup": speedup}
        table.add_row(
            sampler,
            "-" if row["n_s"] is None else str(row["n_s"]),
            _mean_std(row["auc"]),
            _mean_std(row["ap"]),
            f"{np.mean(row['sample_seconds']):.3f}",
            f"{np.mean(row['train_seconds']):.2f}",
            f"{total:.2f}",
            "-" if speedup is None else f"×{speedup:.1f}",
        )
    console.print(table)

    os.makedirs(base.out_dir, exist_ok=True)
    out_path = os.path.join(base.out_dir, "bench.json")
    with open(out_path, "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2)
    console.print(f"✅ Exporté: {out_path}")
    return 0


def _add_training_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", type=str, default=None, help="Fichier de liste d'arêtes")
    p.add_argument("--features", type=str, default=None, help="CSV de caractéristiques (une ligne par nœud)")
    p.add_argument("--labels", type=str, default=None, help="Fichier d'étiquettes de communautés")
    p.add_argument("--model", choices=sorted(MODEL_CHOICES), default="gae", help="gae ou vgae")
    p.add_argument("--alpha", type=float, default=1.0, help="Exposant de la distribution d'échantillonnage")
    p.add_argument("--subgraph-size", type=str, default="auto", help="Taille n_S (entier ou 'auto')")
    p.add_argument("--replacement", action="store_true", help="Tirage avec remise")
    p.add_argument("--dim", type=int, default=16, help="Dimension des embeddings")
    p.add_argument("--hidden", type=int, default=32, help="Taille de la couche cachée")
    p.add_argument("--lr", type=float, default=0.01, help="Taux d'apprentissage Adam")
    p.add_argument("--iterations", type=int, default=None, help="Itérations (200 si n<100000, sinon 300)")
    p.add_argument("--dropout", type=float, default=0.0, help="Taux de dropout")
    p.add_argument("--kl-all-nodes", action=argparse.BooleanOptionalAction, default=True,
                   help="Terme KL sur tous les nœuds (sinon sur le sous-graphe)")
    p.add_argument("--val-frac", type=float, default=0.05, help="Part d'arêtes de validation")
    p.add_argument("--test-frac", type=float, default=0.10, help="Part d'arêtes de test")
    p.add_argument("--gamma", type=float, default=1.0, help="Écart toléré pour le seuil n*_S")
    p.add_argument("--confidence", type=float, default=0.1, help="Niveau alpha du seuil n*_S")
    p.add_argument("--epsilon", type=float, default=0.001, help="Borne epsilon du décodeur")
    p.add_argument("--seed", type=int, default=0, help="Graine aléatoire")
    p.add_argument("--out-dir", type=str, default="output", help="Dossier de sortie")
    p.add_argument("--progress", action="store_true", help="Barre de progression")


def build_parser(train_defaults: Optional[Dict[str, Any]] = None) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="FastGAE : auto-encodeurs de graphes par sous-graphes échantillonnés")
    parser.add_argument("--verbose", action="store_true", help="Journalisation détaillée (perte à chaque itération)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="Entraîner un GAE/VGAE et évaluer les embeddings")
    _add_training_flags(p)
    p.add_argument("--sampler", choices=SAMPLER_CHOICES, default="degree", help="Stratégie de décodage")
    p.add_argument("--task", choices=TASK_CHOICES, default="lp", help="lp, cluster ou both")
    p.add_argument("--clusters", type=int, default=None, help="Nombre de clusters k-means")
    p.add_argument("--config", type=str, default=None, help="config.yaml d'une exécution précédente")
    p.set_defaults(func=cmd_train, **(train_defaults or {}))

    p = sub.add_parser("threshold", help="Taille de sous-graphe n*_S = C sqrt(n)")
    p.add_argument("--n", type=int, required=True, help="Nombre de nœuds")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--confidence", type=float, default=0.1)
    p.add_argument("--epsilon", type=float, default=0.001)
    p.add_argument("--loss", choices=LOSS_KINDS, default="cross_entropy")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("sbm", help="Générer un graphe à blocs stochastiques")
    p.add_argument("--communities", type=int, default=10)
    p.add_argument("--community-size", type=int, default=100)
    p.add_argument("--p-in", type=float, default=0.05)
    p.add_argument("--p-out", type=float, default=0.005)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-prefix", type=str, required=True, help="Préfixe des fichiers .edges et .labels")
    p.set_defaults(func=cmd_sbm)

    p = sub.add_parser("stats", help="Statistiques structurelles d'un graphe")
    p.add_argument("--input", type=str, required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("bench", help="Comparer les stratégies de décodage sur plusieurs graines")
    _add_training_flags(p)
    p.add_argument("--strategies", type=str, default="none,uniform,degree,core,negative",
                   help="Échantillonneurs séparés par des virgules")
    p.add_argument("--runs", type=int, default=3, help="Nombre de graines par stratégie")
    p.set_defaults(func=cmd_bench)
    return parser


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse argv; for `train --config`, the YAML supplies defaults that explicit flags override."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "train" and args.config:
        parser = build_parser(train_defaults=load_run_config(args.config))
        args = parser.parse_args(argv)
    if args.command in ("train", "bench") and not args.input:
        parser.error("--input est obligatoire")
    return args


def main(argv: Optional[List[str]] = None) -> int:
    start = time.perf_counter()
    try:
        args = parse_args(argv)
        setup_logging(args.verbose)
        code = args.func(args)
    except (ValueError, OSError) as e:
        console.print(f"❌ Erreur: {e}")
        return 1
    console.log(f"⏱️  Terminé en {time.perf_counter() - start:.1f}s")
    return code


if __name__ == "__main__":
    sys.exit(main())
