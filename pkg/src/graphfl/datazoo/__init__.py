from .csbm import CsbmParams, fedcsbm_generate
from .louvain import louvain_partition, modularity
from .splitters import (
    FederatedDataset,
    attribute_splitter,
    community_splitter,
    instance_space_splitter,
    label_space_splitter,
    load_federated_dataset,
    random_splitter,
    resplit_from_manifest,
    save_federated_dataset,
)

__all__ = [
    "CsbmParams",
    "FederatedDataset",
    "attribute_splitter",
    "community_splitter",
    "fedcsbm_generate",
    "instance_space_splitter",
    "label_space_splitter",
    "load_federated_dataset",
    "louvain_partition",
    "modularity",
    "random_splitter",
    "resplit_from_manifest",
    "save_federated_dataset",
]
