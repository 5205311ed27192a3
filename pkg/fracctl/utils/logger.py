import logging
import os
import pickle
import time


def get_logger(name):
    """Named logger below the package root logger ``fracctl``."""
    if not name.startswith("fracctl"):
        name = f"fracctl.{name}"
    return logging.getLogger(name)


class Logger:
    """
    Records per-iteration scalars with tensorboard style functions.

    Scalars stay in memory; when log_dir is given they are also pickled to
    ``{log_dir}{tag}.p`` (tags like "fixed_point/update_norm" become
    subdirectories) together with ``hparams.p``.
    """
    def __init__(self, log_dir=None):
        if log_dir is not None and not log_dir.endswith(os.sep):
            log_dir = log_dir + os.sep
        self.log_dir = log_dir
        self.hparams = {"hparams": {}, "metrics": {}}
        self.tags = {}

    def _save(self):
        if self.log_dir is None:
            return
        for tag in self.tags:
            filename = f"{self.log_dir}{tag}.p"
            os.makedirs(os.path.dirname(filename), exist_ok=True)
            with open(filename, "wb") as fh:
                pickle.dump(self.tags[tag], fh)

        os.makedirs(self.log_dir, exist_ok=True)
        with open(f"{self.log_dir}hparams.p", "wb") as fh:
            pickle.dump(self.hparams, fh)

    def make_new_tag(self, tag):
        if tag in self.tags:
            raise KeyError(f"tag {tag!r} already exists")
        self.tags[tag] = {"scalars": [], "global_step": [], "walltime": []}

    def add_scalar(self, tag, scalar_value, global_step=None, walltime=None):
        if walltime is None:
            walltime = time.time()
        if tag not in self.tags:
            self.make_new_tag(tag)

        self.tags[tag]["scalars"].append(float(scalar_value))
        self.tags[tag]["global_step"].append(global_step)
        self.tags[tag]["walltime"].append(walltime)

        self._save()

    def add_hparams(self, hparam_dict=None, metric_dict=None):
        if metric_dict is None:
            metric_dict = {}
        if hparam_dict is None:
            hparam_dict = {}
        self.hparams = {"hparams": hparam_dict, "metrics": metric_dict}

        self._save()

    def close(self):
        self._save()
