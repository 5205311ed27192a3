import pathlib
import shutil

from ..exceptions import ArtifactIOError


def is_notebook():
    try:
        shell = get_ipython().__class__.__name__
        if shell == 'ZMQInteractiveShell':
            return True   # Jupyter notebook or qtconsole
        return False
    except NameError:
        return False


def prep_out_dir(out_dir='./runs/test_run/', problem_path=None):
    """
    Create the run directory and copy the problem file into it as problem.json.

    return: str
        Absolute path to out_dir
    """
    path = pathlib.Path(out_dir)
    try:
        path.mkdir(parents=True, exist_ok=True)
        if problem_path is not None:
            source = pathlib.Path(problem_path).absolute()
            target = path.absolute() / 'problem.json'
            if source != target:
                shutil.copy(str(source), str(target))
    except OSError as err:
        raise ArtifactIOError(f"cannot prepare output directory {out_dir}: {err}",
                              path=str(out_dir)) from err
    return str(path.absolute())
