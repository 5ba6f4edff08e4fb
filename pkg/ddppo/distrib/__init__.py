"""Decentralized synchronization: KV store, ring AllReduce, preemption."""

from .group import WorkerGroup, barrier, rendezvous, verify_consistent
from .preemption import PreemptionPolicy, report_rollout_done, should_preempt
from .ring import CollectiveHandle, allreduce_mean
from .store import KvClient, KvServer, KvTable, iteration_key, kv_add

__all__ = [
    "CollectiveHandle",
    "KvClient",
    "KvServer",
    "KvTable",
    "PreemptionPolicy",
    "WorkerGroup",
    "allreduce_mean",
    "barrier",
    "iteration_key",
    "kv_add",
    "rendezvous",
    "report_rollout_done",
    "should_preempt",
    "verify_consistent",
]
