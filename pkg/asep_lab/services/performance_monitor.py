"""
Throughput monitoring for experiments
"""
import time
from pathlib import Path
from typing import Dict, List, Union

from prometheus_client import CollectorRegistry, Counter, Histogram, write_to_textfile

from asep_lab.models.experiment import TrialRecord

TRIAL_SECONDS_BUCKETS = (0.001, 0.01, 0.1, 0.5, 1, 2, 5, 10, 30, 60, 300)


class PerformanceMonitor:
    """Per-experiment counters; trials finish in worker processes, so records are fed in here"""

    def __init__(self, experiment: str):
        self.experiment = experiment
        self.registry = CollectorRegistry()
        self.trials = Counter("asep_lab_trials", "Completed trials", ["experiment"], registry=self.registry)
        self.events = Counter("asep_lab_events", "Simulated events", ["experiment"], registry=self.registry)
        self.accepted = Counter("asep_lab_accepted_events", "Events that moved a particle", ["experiment"],
                                registry=self.registry)
        self.trial_seconds = Histogram("asep_lab_trial_seconds", "Wall time per trial", ["experiment"],
                                       buckets=TRIAL_SECONDS_BUCKETS, registry=self.registry)
        self.durations: List[float] = []
        self.total_events = 0
        self.started = time.perf_counter()

    def record_trial(self, record: TrialRecord) -> None:
        self.trials.labels(self.experiment).inc()
        self.events.labels(self.experiment).inc(record.events)
        self.accepted.labels(self.experiment).inc(record.accepted)
        self.trial_seconds.labels(self.experiment).observe(record.wall_time)
        self.durations.append(record.wall_time)
        self.total_events += record.events

    def get_stats(self) -> Dict[str, Union[float, int, str]]:
        if not self.durations:
            return {"message": "No trials recorded"}
        elapsed = time.perf_counter() - self.started
        return {
            "trials": len(self.durations),
            "events": self.total_events,
            "elapsed_seconds": elapsed,
            "events_per_second": self.total_events / elapsed if elapsed > 0 else 0.0,
            "mean_trial_seconds": sum(self.durations) / len(self.durations),
            "max_trial_seconds": max(self.durations),
        }

    def write(self, path: Union[str, Path]) -> None:
        write_to_textfile(str(path), self.registry)
