"""Seeded simulator of the noisy linear response model.

Uses a counter-based Philox generator behind numpy's Generator API so that
split sub-streams (replications, algorithm stages) are provably disjoint.
One Environment is owned by one worker at a time.
"""

from __future__ import annotations

import math

import numpy as np

from .core import HeteroInstance, _as_matrix
from .design import RoundSchedule

NOISE_MODES = ("gaussian", "silent")


class Environment:
    def __init__(
        self,
        arms,
        theta_star,
        sigma_star,
        seed=0,
        noise_mode: str = "gaussian",
        recorder: list | None = None,
        label: str = "env",
        _seed_seq: np.random.SeedSequence | None = None,
    ):
        if noise_mode not in NOISE_MODES:
            raise ValueError(f"noise_mode must be one of {NOISE_MODES}")
        self.arms = _as_matrix(arms, "arms")
        self.theta_star = np.asarray(theta_star, dtype=np.float64).ravel()
        self.sigma_star = np.asarray(sigma_star, dtype=np.float64)
        self.noise_mode = noise_mode
        self.recorder = recorder
        self.label = label
        self._means = self.arms @ self.theta_star
        var = np.einsum("ij,jk,ik->i", self.arms, self.sigma_star, self.arms)
        self._stds = np.sqrt(np.maximum(var, 0.0))
        self._seed_seq = _seed_seq if _seed_seq is not None else np.random.SeedSequence(seed)
        self._rng = np.random.Generator(np.random.Philox(self._seed_seq))
        self.pull_count = 0

    @classmethod
    def from_instance(
        cls,
        instance: HeteroInstance,
        seed=0,
        noise_mode: str = "gaussian",
        recorder: list | None = None,
    ) -> "Environment":
        return cls(
            instance.arms,
            instance.theta_star,
            instance.sigma_star,
            seed=seed,
            noise_mode=noise_mode,
            recorder=recorder,
        )

    def split(self, n: int) -> list["Environment"]:
        """Spawn n child environments with disjoint random streams.

        Children share the recorder (if any) but keep their own pull counts.
        """
        children = []
        for i, child_seq in enumerate(self._seed_seq.spawn(n)):
            children.append(
                Environment(
                    self.arms,
                    self.theta_star,
                    self.sigma_star,
                    noise_mode=self.noise_mode,
                    recorder=self.recorder,
                    label=f"{self.label}/{i}",
                    _seed_seq=child_seq,
                )
            )
        return children

    def _check_index(self, arm_index: int):
        if not 0 <= arm_index < self.arms.shape[0]:
            raise IndexError(f"arm index {arm_index} out of range")

    def sample(self, arm_index: int) -> float:
        """One noisy observation of the indexed arm."""
        self._check_index(arm_index)
        y = self._means[arm_index]
        if self.noise_mode == "gaussian":
            y = y + self._stds[arm_index] * self._rng.standard_normal()
        self.pull_count += 1
        if self.recorder is not None:
            self.recorder.append((self.label, arm_index, float(y)))
        return float(y)

    def sample_schedule(self, schedule: RoundSchedule) -> tuple[np.ndarray, np.ndarray]:
        """Execute a pull schedule in ascending arm order.

        Returns parallel arrays of arm indices and observations, one entry
        per pull.
        """
        idx_parts, y_parts = [], []
        for arm, count in enumerate(schedule.counts):
            if count <= 0:
                continue
            mu = self._means[arm]
            if self.noise_mode == "gaussian":
                ys = mu + self._stds[arm] * self._rng.standard_normal(count)
            else:
                ys = np.full(count, mu)
            idx_parts.append(np.full(count, arm, dtype=np.int64))
            y_parts.append(ys)
        self.pull_count += schedule.total
        if not idx_parts:
            return np.empty(0, dtype=np.int64), np.empty(0)
        idx = np.concatenate(idx_parts)
        ys = np.concatenate(y_parts)
        if self.recorder is not None:
            self.recorder.extend(
                (self.label, int(a), float(v)) for a, v in zip(idx, ys)
            )
        return idx, ys

    def sample_schedule_sums(self, schedule: RoundSchedule) -> tuple[np.ndarray, np.ndarray]:
        """Per-arm observation sums for a schedule, one Gaussian draw per arm.

        The sum of n i.i.d. responses is drawn directly from its exact
        distribution, so estimators that only need per-arm totals avoid
        materializing every pull. Counts are returned as floats to survive
        very large budgets.
        """
        counts = np.zeros(self.arms.shape[0])
        sums = np.zeros(self.arms.shape[0])
        for arm, count in enumerate(schedule.counts):
            if count <= 0:
                continue
            counts[arm] = float(count)
            total_mean = float(count) * self._means[arm]
            if self.noise_mode == "gaussian":
                sums[arm] = total_mean + math.sqrt(count) * self._stds[arm] * self._rng.standard_normal()
            else:
                sums[arm] = total_mean
        self.pull_count += schedule.total
        return counts, sums
