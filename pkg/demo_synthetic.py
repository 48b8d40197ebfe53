from src.evaluate import cluster_embeddings, link_prediction_report
from src.graph import NodeFeatures, split_edges
from src.params import SbmSpec, TrainConfig
from src.synth import generate_sbm
from src.train import train

spec = SbmSpec(num_communities=10, community_size=100, p_in=0.05, p_out=0.005, seed=0)
g, labels = generate_sbm(spec)
features = NodeFeatures.identity(g.n)

split = split_edges(g, seed=0)
for strategy, measure in (("full", "uniform"), ("fastgae", "uniform"), ("fastgae", "degree")):
    res = train(split.train_graph, features, TrainConfig(strategy=strategy, measure=measure, seed=0))
    report = link_prediction_report(res.embeddings, split)
    print(strategy, measure, res.n_s_used, f"AUC={report['auc']:.4f}", f"AP={report['ap']:.4f}",
          f"{res.iteration_seconds * 1000:.1f}ms/it")

res = train(g, features, TrainConfig(kind="vae", strategy="fastgae", measure="degree", seed=0))
_, ami = cluster_embeddings(res.embeddings, labels, seed=0)
print("vae degree", res.n_s_used, f"AMI={ami:.4f}")
