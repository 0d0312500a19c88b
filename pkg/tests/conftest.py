import numpy as np
import pytest

from robustlift import (
    BinomialLikelihoodRegion,
    ChannelData,
    DecisionSpace,
    LiftStudy,
    build_outcome_matrix,
    fisher_ellipsoid,
)


@pytest.fixture(scope="session")
def one_channel_study():
    return LiftStudy(
        channels=(ChannelData(trials_holdout=200, successes_holdout=10,
                              trials_marketing=200, successes_marketing=30, cost=1.0),),
        budget=1.0,
    )


@pytest.fixture(scope="session")
def two_channel_study():
    return LiftStudy(
        channels=(
            ChannelData(trials_holdout=300, successes_holdout=12,
                        trials_marketing=300, successes_marketing=30, cost=1.0),
            ChannelData(trials_holdout=400, successes_holdout=20,
                        trials_marketing=400, successes_marketing=44, cost=1.5),
        ),
        budget=1.0,
    )


@pytest.fixture(scope="session")
def degenerate_study():
    # one group never converts: the MLE touches the box boundary
    return LiftStudy(
        channels=(ChannelData(trials_holdout=150, successes_holdout=0,
                              trials_marketing=150, successes_marketing=9, cost=0.8),),
        budget=1.0,
    )


@pytest.fixture(scope="session")
def lr_region_1ch(one_channel_study):
    return BinomialLikelihoodRegion.from_study(one_channel_study, alpha=0.05)


@pytest.fixture(scope="session")
def lr_region_2ch(two_channel_study):
    return BinomialLikelihoodRegion.from_study(two_channel_study, alpha=0.05)


@pytest.fixture(scope="session")
def ellipsoid_2ch(two_channel_study):
    return fisher_ellipsoid(two_channel_study, alpha=0.05)


@pytest.fixture(scope="session")
def matrix_1ch(one_channel_study):
    return build_outcome_matrix(one_channel_study)


@pytest.fixture(scope="session")
def matrix_2ch(two_channel_study):
    return build_outcome_matrix(two_channel_study)


@pytest.fixture(scope="session")
def space_1ch(one_channel_study):
    return DecisionSpace(1, one_channel_study.budget)


@pytest.fixture(scope="session")
def space_2ch(two_channel_study):
    return DecisionSpace(2, two_channel_study.budget)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
