#!/usr/bin/env python3
"""
Analyse des résultats d'entraînement FastGAE (metrics.json).
"""

import argparse
import json
import os
import sys
from typing import Any, Dict, List

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.console import console


def load_metrics(path: str) -> Dict[str, Any]:
    if not os.path.exists(path):
        raise FileNotFoundError(f"Fichier de métriques introuvable: {path}")
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def _pct(value) -> str:
    return "-" if value is None else f"{100.0 * value:.2f}%"


def summarize(metrics: Dict[str, Any]) -> pd.DataFrame:
    """One row per run with its headline numbers."""
    cfg = metrics.get("config", {})
    losses = metrics.get("loss_history") or []
    return pd.DataFrame([{
        "model": cfg.get("model"),
        "sampler": cfg.get("sampler"),
        "n_s": metrics.get("n_s_used"),
        "iterations": len(losses),
        "auc": metrics.get("auc"),
        "ap": metrics.get("ap"),
        "ami": metrics.get("ami"),
        "final_loss": losses[-1] if losses else None,
        "train_seconds": metrics.get("train_seconds"),
        "sample_seconds": metrics.get("sample_seconds"),
    }])


def analyze_results(metrics_paths: List[str], plot: bool = True) -> pd.DataFrame:
    """Affiche un résumé des exécutions et trace les courbes de perte."""
    runs = {}
    for path in metrics_paths:
        console.print(f"Analyse des résultats: {path}")
        runs[path] = load_metrics(path)
    df = pd.concat([summarize(m).assign(run=p) for p, m in runs.items()], ignore_index=True)

    console.print("\n📊 Statistiques générales:")
    for row in df.to_dict("records"):
        row = {k: (None if pd.isna(v) else v) for k, v in row.items()}
        seconds = "-" if row["train_seconds"] is None else f"{row['train_seconds']:.2f}s"
        console.print(
            f"   • {row['run']}: {row['model']}/{row['sampler']} | n_S={'-' if row['n_s'] is None else int(row['n_s'])} | "
            f"AUC {_pct(row['auc'])} | AP {_pct(row['ap'])} | AMI {_pct(row['ami'])} | {seconds}"
        )

    for path, metrics in runs.items():
        losses = np.asarray(metrics.get("loss_history") or [], dtype=np.float64)
        if len(losses) == 0:
            continue
        console.print(f"\n📈 Perte ({os.path.basename(os.path.dirname(path)) or path}):")
        for it in np.unique(np.linspace(0, len(losses) - 1, 5).astype(int)):
            console.print(f"   itération {it + 1:4d}: {losses[it]:.4f}")

    if plot:
        try:
            for path, metrics in runs.items():
                create_plots(metrics, path)
        except Exception as e:
            console.print(f"\n⚠️  Avertissement: impossible de créer les graphiques: {e}")
    return df


def create_plots(metrics: Dict[str, Any], metrics_path: str) -> str:
    """Courbes de perte à côté de metrics.json."""
    cfg = metrics.get("config", {})
    histories = {"lp": metrics.get("loss_history") or []}
    if metrics.get("cluster_loss_history"):
        histories["cluster"] = metrics["cluster_loss_history"]

    fig, ax = plt.subplots(figsize=(8, 5))
    fig.suptitle(f"FastGAE - {cfg.get('model', '?')}/{cfg.get('sampler', '?')}", fontsize=14)
    for name, history in histories.items():
        if history:
            ax.plot(np.arange(1, len(history) + 1), history, label=name)
    ax.set_xlabel("Itération")
    ax.set_ylabel("Perte")
    ax.set_title(f"n_S = {metrics.get('n_s_used') or '-'}")
    ax.grid(True, alpha=0.3)
    ax.legend()
    plt.tight_layout()

    plot_path = os.path.join(os.path.dirname(metrics_path) or ".", "loss_curve.png")
    plt.savefig(plot_path, dpi=150, bbox_inches="tight")
    console.print(f"\n📊 Graphique sauvegardé: {plot_path}")
    plt.close(fig)
    return plot_path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Analyse des résultats FastGAE")
    parser.add_argument("--results", type=str, nargs="+", default=["output/metrics.json"],
                        help="Un ou plusieurs fichiers metrics.json")
    parser.add_argument("--no-plot", action="store_true", help="Ne pas tracer les courbes")
    args = parser.parse_args(argv)

    missing = [p for p in args.results if not os.path.exists(p)]
    if missing:
        console.print(f"❌ Erreur: fichier introuvable {missing[0]}")
        return 1
    analyze_results(args.results, plot=not args.no_plot)
    return 0


if __name__ == "__main__":
    sys.exit(main())
