from collections import OrderedDict
import time
from typing import Any, Callable, Dict

from thermal_cluster import run_log
from thermal_cluster.base import BaseClass


def _qualname(function: Callable) -> str:
    # callable instances carry the name on their class
    return getattr(function, "__qualname__", type(function).__qualname__)


class Step:
    """
    A pipeline run is made up of a series of steps executed in
    linear order. Each step holds the callable that produces one
    output of the pipeline plus any arguments or key word arguments.
    The solve function can then be run to execute the step.
    """

    def __init__(self, name: str, function: Callable, *args, **kwargs):
        """a class that defines a step in the solver.

        Parameters
        ----------
        name : str
            The name the step is recorded under.
        function : Callable
            The function that is ran by the step.
        """
        self._name = name
        self.function = function
        self.args = args
        self.kwargs = kwargs
        self.elapsed: float = 0.0

    @property
    def name(self) -> str:
        """The name of the step.

        Returns
        -------
        str
            String for the name in step class.
        """
        return self._name

    def solve(self) -> Any:
        """Runs the function within the step and records the
        time taken for the step to solve in the run log.

        Returns
        -------
        Any
            Whatever the step function returns.
        """
        start = time.perf_counter()
        result = self.function(*self.args, **self.kwargs)
        self.elapsed = time.perf_counter() - start
        run_log.info(
            (
                f"\n###########################"
                f"\n{self.name} took {self.elapsed:.3f} s to run"
                f"\n###########################\n"
            )
        )
        return result

    def to_dict(self) -> dict:
        """Returns a definition of the step as a dictionary.

        Returns
        -------
        dict
            A dictionary defining the step.
        """
        return dict(
            function=f"{self.function.__module__}.{_qualname(self.function)}",
            args=list(self.args),
            kwargs=dict(self.kwargs),
        )


class Solver(BaseClass):
    """
    The solver contains an ordered dictionary made up of the
    steps that the pipeline will go through.

    The results of every step are kept by name so that a
    later step or the caller can inspect them.
    """

    def __init__(self):
        """Initialises and defines the ordered dict."""
        self.run: Dict[str, Step] = OrderedDict()
        self.results: Dict[str, Any] = {}

    def build_from_step_list(self, step_list: list):
        """Builds a run array from a list of steps.

        Parameters
        ----------
        step_list : list
            List of Step classes that will be ran in order.
        """
        for step in step_list:
            self.run[step.name] = step

    def solve(self) -> Dict[str, Any]:
        """Solves the steps in the ordered dict.

        Returns
        -------
        dict
            The result of each step by name.
        """
        for name, step in self.run.items():
            self.results[name] = step.solve()
        return self.results

    def timings(self) -> Dict[str, float]:
        """The wall time of each step of the last solve.

        Returns
        -------
        dict
            Seconds taken by each step.
        """
        return {name: step.elapsed for name, step in self.run.items()}

    def to_dict(self, exclusions: list = []) -> dict:
        """Outputs the full dictionary of the
        solver Steps.

        Parameters
        ----------
        exclusions : list, optional
            Anything to be excluded from the dictionary by default [].

        Returns
        -------
        dict
            The dictionary representing the solver.
        """
        step_details = {
            name: step.to_dict() for name, step in self.run.items() if name not in exclusions
        }
        order = {str(i_step): name for i_step, name in enumerate(step_details)}
        return dict(order=order, details=step_details)
