"""graphfl: desk-scale federated graph learning.

Subpackages:
  graph     CSR graph type, transforms, homophily, disk format
  datazoo   splitters and the federal random-graph generator
  nn        dense GNN bricks with hand-derived backward passes
  runtime   event-driven message passing (memory and TCP transports)
  algos     FedAvg/FedProx/FedOpt, local trainer, personalization
  monitor   heterogeneity metrics and JSONL run logs
  tuner     checkpoints and successive-halving HPO
"""

__version__ = "0.1.0"
