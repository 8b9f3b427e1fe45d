"""Plant growth under spatial competition: particle system and mean-field scheme."""

from ._plantmf import (
    Config,
    ConfigError,
    DomainError,
    IoError,
    MeanFieldModel,
    ModelParams,
    NumericalError,
    competition_potential,
    converge,
    feature_count,
    gompertz,
    polynomial_features,
    sample_mu0,
    simulate,
    train,
    w1_matching,
    w1_sorted_1d,
)

__all__ = [
    "Config",
    "ConfigError",
    "DomainError",
    "IoError",
    "MeanFieldModel",
    "ModelParams",
    "NumericalError",
    "competition_potential",
    "converge",
    "feature_count",
    "gompertz",
    "polynomial_features",
    "sample_mu0",
    "simulate",
    "train",
    "w1_matching",
    "w1_sorted_1d",
]
