from .problem import MIN_STEPS, Numerics, ProblemSpec, load_problem, problem_from_dict
from .export import (
    CSV_FMT,
    export,
    read_json,
    read_timeseries,
    timeseries_header,
    write_json,
    write_timeseries,
)
