"""
Abstract interfaces for the superactivation toolkit.

These interfaces define contracts that optimization engines and bound
evaluators must follow, so the CLI can drive them interchangeably.
"""
from abc import ABC, abstractmethod

from core.models import (
    BlockOperator,
    BoundKind,
    BoundSample,
    CodeResult,
    PowerIterationResult,
    SeesawConfig,
)


class ISeesawEngine(ABC):
    """Interface for encoder/decoder alternating optimizers."""

    @abstractmethod
    def run(self, config: SeesawConfig) -> CodeResult:
        """Run all restarts and return the best code."""
        pass

    @abstractmethod
    def get_configuration_info(self, config: SeesawConfig) -> dict:
        """Describe how the engine will be configured for this run."""
        pass


class IPowerIteration(ABC):
    """Interface for one half-step of the seesaw solved by power iteration."""

    @abstractmethod
    def iterate(self, channel: BlockOperator, start: BlockOperator) -> PowerIterationResult:
        """Iterate from `start` against the fixed `channel` blocks."""
        pass


class IRateBound(ABC):
    """Interface for a finite-blocklength bound as a function of n."""

    @property
    @abstractmethod
    def kind(self) -> BoundKind:
        """Which curve this evaluator produces."""
        pass

    @abstractmethod
    def evaluate(self, n: int) -> BoundSample:
        """Evaluate the bound at blocklength n."""
        pass
