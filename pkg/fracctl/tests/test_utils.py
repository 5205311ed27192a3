import logging
import pickle

import numpy as np
import pytest

from fracctl.calculus import TimeGrid
from fracctl.control import kalman_rank
from fracctl.exceptions import ArtifactIOError, InputError
from fracctl.kernels import DEPTH_CAP, build_kernels
from fracctl.models import SinusoidProfile
from fracctl.utils import Logger, RandomLinearInstance, get_logger, haar_orthogonal, prep_out_dir


def test_logger_keeps_scalars_in_memory():
    logger = Logger()
    for step in range(3):
        logger.add_scalar("fixed_point/update_norm", 10.0 ** -step, global_step=step)
    assert logger.tags["fixed_point/update_norm"]["scalars"] == [1.0, 0.1, 0.01]
    assert logger.tags["fixed_point/update_norm"]["global_step"] == [0, 1, 2]
    assert "missing" not in logger.tags
    with pytest.raises(KeyError):
        logger.make_new_tag("fixed_point/update_norm")


def test_logger_pickles_to_log_dir(tmp_path):
    logger = Logger(log_dir=str(tmp_path / "log"))
    logger.add_scalar("split/T_v", 0.5, global_step=1)
    logger.add_hparams({"alpha": 0.6}, {"converged": True})
    with open(tmp_path / "log" / "split" / "T_v.p", "rb") as fh:
        assert pickle.load(fh)["scalars"] == [0.5]
    with open(tmp_path / "log" / "hparams.p", "rb") as fh:
        assert pickle.load(fh) == {"hparams": {"alpha": 0.6}, "metrics": {"converged": True}}


def test_get_logger_lives_below_package_root():
    assert get_logger("solver").name == "fracctl.solver"
    assert get_logger("fracctl.cli").name == "fracctl.cli"
    assert get_logger("solver").parent is logging.getLogger("fracctl")


def test_prep_out_dir_copies_problem(tmp_path, problems_dir):
    path = prep_out_dir(str(tmp_path / "run" / "a"), problem_path=problems_dir / "linear_scalar.json")
    copied = tmp_path / "run" / "a" / "problem.json"
    assert path == str(copied.parent)
    assert copied.read_text() == (problems_dir / "linear_scalar.json").read_text()
    # copying a run's own problem.json onto itself is a no-op
    prep_out_dir(path, problem_path=copied)
    assert copied.exists()


def test_prep_out_dir_reports_failures():
    with pytest.raises(ArtifactIOError) as info:
        prep_out_dir("/dev/null/fracctl")
    assert info.value.path == "/dev/null/fracctl"


def test_haar_orthogonal():
    Q = haar_orthogonal(4, random_state=0)
    np.testing.assert_allclose(Q.T @ Q, np.eye(4), atol=1e-12)
    np.testing.assert_array_equal(Q, haar_orthogonal(4, random_state=0))


def test_instances_are_reproducible():
    first = RandomLinearInstance(d_max=4).sample_many(5, random_state=3)
    second = RandomLinearInstance(d_max=4).sample_many(5, random_state=3)
    for a, b in zip(first, second):
        np.testing.assert_array_equal(a.A, b.A)
        np.testing.assert_array_equal(a.B, b.B)
        assert a.alpha == b.alpha


def test_instance_shapes_and_spectrum():
    for inst in RandomLinearInstance(d=3, N=2, eig_max=1.5).sample_many(10, random_state=5):
        assert (inst.d, inst.N) == (3, 2)
        np.testing.assert_array_equal(inst.A, inst.A.T)
        eigenvalues = np.linalg.eigvalsh(inst.A)
        assert eigenvalues.min() >= -1e-12
        assert eigenvalues.max() <= 1.5 + 1e-12
        assert 0.4 <= inst.alpha <= 0.9
        assert isinstance(inst.g, SinusoidProfile)
        assert inst.y0.shape == inst.yb.shape == (3,)


def test_default_instances_all_build_kernels():
    grid = TimeGrid(0.0, 1.0, 50)
    for inst in RandomLinearInstance().sample_many(25, random_state=2024):
        kernel = build_kernels(-inst.A, inst.g.sample(grid), inst.alpha)
        assert kernel.depth <= DEPTH_CAP


def test_sampler_gives_up_on_untruncatable_series():
    sampler = RandomLinearInstance(d=3, alpha_range=(0.4, 0.4), eig_max=1e3, max_redraws=5)
    with pytest.raises(InputError):
        sampler.sample(random_state=0)


def test_uncontrollable_instances_are_rank_deficient():
    for inst in RandomLinearInstance(d_max=4, uncontrollable=True).sample_many(10, random_state=9):
        rank, controllable = kalman_rank(inst.A, inst.B)
        assert not controllable
        assert rank < inst.d


@pytest.mark.parametrize("kwargs", [
    {"d_max": 0},
    {"alpha_range": (0.0, 0.5)},
    {"alpha_range": (0.5, 1.0)},
    {"d_max": 1, "uncontrollable": True},
])
def test_sampler_validation(kwargs):
    with pytest.raises(InputError):
        RandomLinearInstance(**kwargs)
