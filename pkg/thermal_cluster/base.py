import copy
import os
from pathlib import Path
import pprint
from typing import Any, List, Optional, Union

from pint.errors import DimensionalityError, UndefinedUnitError

from thermal_cluster import run_log, ureg, Q_
from thermal_cluster.utils import UpdateDict, encoder, change_handler, load_and_merge


class ConfigurationNotFullyPopulated(Exception):
    """An exception for when the configuration is not
    populated correctly with all the information required
    for a method to function correctly.
    """

    pass


class ConfigurationError(ValueError):
    """An exception for a configuration value that
    breaks one of the run configuration rules (sorted grids,
    positive trial counts, an explicit seed...).
    """

    pass


THREADS_ENV = "THERMAL_CLUSTER_THREADS"

DEFAULTS: dict = dict(
    delta=1.0,
    temperature_grid=[round(0.05 * i, 2) for i in range(1, 11)],
    temperature=0.2,
    sizes=[3, 5, 7],
    p_grid=[0.020, 0.024, 0.028, 0.032, 0.036, 0.040],
    trials=20000,
    seed=20120601,
    n_cor=2,
    output_dir=".",
    threads=1,
    decoder="pymatching",
    bootstrap=1000,
    m_list=[3, 4, 6, 10],
    beta_list=[8.0, 10.0],
)

DECODER_NAMES = ("pymatching", "networkx")


def _fail(msg: str, error: type = ConfigurationError):
    run_log.error(msg)
    raise error(msg)


def _sorted_grid(name: str, value: Any, kind: type = float) -> list:
    """Checks a grid is a non-empty ascending list and converts
    the entries to kind."""
    if isinstance(value, (str, bytes)) or not hasattr(value, "__iter__"):
        _fail(f"{name} must be a list, got {value!r}")
    try:
        grid = [kind(item) for item in value]
    except (TypeError, ValueError):
        _fail(f"{name} entries must be {kind.__name__}, got {value!r}")
    if len(grid) == 0:
        _fail(f"{name} must not be empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        _fail(f"{name} must be sorted ascending without repeats, got {grid}")
    return grid


class MetaConfig(type):
    """
    The run configuration is shared by every stage of the pipeline.
    Properties and setters are defined on the metaclass so that the
    configuration can be used without initialising it and the values
    behave like class properties.

    Including properties and setters allows for validation with a
    specific error (ConfigurationError) as soon as a bad value is
    supplied, instead of a failure part way through a long Monte Carlo
    run.
    """

    @property
    def delta(cls) -> Any:
        """The energy scale of the unit-cell Hamiltonian.

        Returns
        -------
        Union[float, Quantity]
            A plain number (energies in units of delta) or
            a pint quantity with energy units.
        """
        return cls._delta

    @delta.setter
    def delta(cls, value: Any):
        if isinstance(value, str):
            try:
                value = ureg(value)
            except (UndefinedUnitError, AttributeError, ValueError) as e:
                _fail(f"delta '{value}' cannot be parsed: {e}")
        if hasattr(value, "units"):
            if not value.dimensionless:
                try:
                    value.to("joule")
                except DimensionalityError:
                    _fail(f"delta must carry energy units, got {value.units}")
            magnitude = value.magnitude
        else:
            magnitude = value
        if not isinstance(magnitude, (int, float)) or not magnitude > 0:
            _fail(f"delta must be positive, got {value}")
        cls._delta = value

    @property
    def delta_magnitude(cls) -> float:
        """The numerical value of delta used by the Hamiltonian.

        Returns
        -------
        float
            delta without units.
        """
        value = cls._delta
        return float(value.magnitude) if hasattr(value, "magnitude") else float(value)

    @property
    def temperature_grid(cls) -> List[float]:
        """Temperatures T/delta for the curves table."""
        return cls._temperature_grid

    @temperature_grid.setter
    def temperature_grid(cls, value: list):
        grid = _sorted_grid("temperature_grid", value)
        if grid[0] <= 0 or grid[-1] > 2:
            _fail(f"temperature_grid values must lie in (0, 2], got {grid}")
        cls._temperature_grid = grid

    @property
    def temperature(cls) -> float:
        """Single temperature T/delta used by the channel dump."""
        return cls._temperature

    @temperature.setter
    def temperature(cls, value: float):
        value = float(value)
        if not 0 < value <= 2:
            _fail(f"temperature must lie in (0, 2], got {value}")
        cls._temperature = value

    @property
    def sizes(cls) -> List[int]:
        """Linear lattice sizes for the threshold scan."""
        return cls._sizes

    @sizes.setter
    def sizes(cls, value: list):
        grid = _sorted_grid("sizes", value, int)
        if grid[0] < 2:
            _fail(f"sizes must be at least 2, got {grid}")
        cls._sizes = grid

    @property
    def p_grid(cls) -> List[float]:
        """Physical error probabilities for the threshold scan."""
        return cls._p_grid

    @p_grid.setter
    def p_grid(cls, value: list):
        grid = _sorted_grid("p_grid", value)
        if grid[0] < 0 or grid[-1] > 0.5:
            _fail(f"p_grid values must lie in [0, 0.5], got {grid}")
        cls._p_grid = grid

    @property
    def trials(cls) -> int:
        """Monte Carlo trials per (L, p) point."""
        return cls._trials

    @trials.setter
    def trials(cls, value: int):
        if isinstance(value, bool) or int(value) != value or int(value) < 1:
            _fail(f"trials must be a positive integer, got {value}")
        cls._trials = int(value)

    @property
    def seed(cls) -> int:
        """The 64-bit master seed.

        Raises
        ------
        ConfigurationNotFullyPopulated
            If the seed has been cleared, every output
            must state the seed it was produced with.
        """
        if cls._seed is None:
            _fail(
                "seed must be set explicitly so that runs are reproducible",
                ConfigurationNotFullyPopulated,
            )
        return cls._seed

    @seed.setter
    def seed(cls, value: Optional[int]):
        if value is not None:
            if isinstance(value, bool) or int(value) != value:
                _fail(f"seed must be an integer, got {value!r}")
            value = int(value)
            if not 0 <= value < 2**64:
                _fail(f"seed must be a 64-bit unsigned integer, got {value}")
        cls._seed = value

    @property
    def n_cor(cls) -> int:
        """Number of correlated-pair contributions folded into each qubit."""
        return cls._n_cor

    @n_cor.setter
    def n_cor(cls, value: int):
        if isinstance(value, bool) or int(value) != value or int(value) < 0:
            _fail(f"n_cor must be a non-negative integer, got {value}")
        cls._n_cor = int(value)

    @property
    def output_dir(cls) -> Path:
        """The directory all outputs (and the run log) are written to."""
        return Path(cls._output_dir)

    @output_dir.setter
    def output_dir(cls, value: Union[str, Path]):
        cls._output_dir = str(value)

    @property
    def threads(cls) -> int:
        """Worker count for the Monte Carlo trials.

        The environment variable THERMAL_CLUSTER_THREADS overrides
        the configured value, "auto" means the hardware parallelism.

        Returns
        -------
        int
            The number of worker processes.
        """
        value = os.environ.get(THREADS_ENV, cls._threads)
        if value == "auto":
            return os.cpu_count() or 1
        try:
            threads = int(value)
        except (TypeError, ValueError):
            _fail(f"threads must be an integer or 'auto', got {value!r}")
        if threads < 1:
            _fail(f"threads must be at least 1, got {threads}")
        return threads

    @threads.setter
    def threads(cls, value: Union[int, str]):
        if value != "auto":
            if isinstance(value, bool) or int(value) != value or int(value) < 1:
                _fail(f"threads must be a positive integer or 'auto', got {value!r}")
            value = int(value)
        cls._threads = value

    @property
    def decoder(cls) -> str:
        """Name of the exact matching decoder."""
        return cls._decoder

    @decoder.setter
    def decoder(cls, value: str):
        if value not in DECODER_NAMES:
            _fail(f"decoder must be one of {DECODER_NAMES}, got {value!r}")
        cls._decoder = value

    @property
    def bootstrap(cls) -> int:
        """Bootstrap replicates for the threshold confidence interval."""
        return cls._bootstrap

    @bootstrap.setter
    def bootstrap(cls, value: int):
        if isinstance(value, bool) or int(value) != value or int(value) < 10:
            _fail(f"bootstrap must be an integer of at least 10, got {value}")
        cls._bootstrap = int(value)

    @property
    def m_list(cls) -> List[int]:
        """Connectivities for the m-connected fidelity table (order kept)."""
        return cls._m_list

    @m_list.setter
    def m_list(cls, value: list):
        try:
            m_list = [int(m) for m in value]
        except (TypeError, ValueError):
            _fail(f"m_list must be a list of integers, got {value!r}")
        if len(m_list) == 0 or min(m_list) < 3:
            _fail(f"m_list must be non-empty with every m >= 3, got {m_list}")
        cls._m_list = m_list

    @property
    def beta_list(cls) -> List[float]:
        """Inverse temperatures delta*beta for the m-connected table."""
        return cls._beta_list

    @beta_list.setter
    def beta_list(cls, value: list):
        grid = _sorted_grid("beta_list", value)
        if grid[0] < 5:
            _fail(f"beta_list values must be at least 5, got {grid}")
        cls._beta_list = grid

    def to_dict(cls) -> dict:
        """Converts the configuration to a dictionary but
        is not implemented in the MetaConfig as it is
        only meant as a metaclass for the actual configuration.

        Raises
        ------
        NotImplementedError
            Not implemented in the MetaConfig.
        """
        raise NotImplementedError()


class BaseConfigMethods:
    """
    BaseConfigMethods contains methods that will be used by a
    configuration class.

    Attributes
    ----------
    _delta : Union[float, Quantity]
        Energy scale of the Hamiltonian.
    _temperature_grid : list
        T/delta values for the curves table.
    _temperature : float
        T/delta value for the channel dump.
    _sizes : list
        Lattice sizes for the threshold scan.
    _p_grid : list
        Error probabilities for the threshold scan.
    _trials : int
        Monte Carlo trials per point.
    _seed : int
        Master seed.
    _n_cor : int
        Correlated contributions per qubit.
    _output_dir : str
        Location of the outputs.
    _threads : Union[int, str]
        Worker count or "auto".
    _decoder : str
        Matching decoder name.
    _bootstrap : int
        Bootstrap replicates.
    _m_list : list
        Connectivities for the m-connected table.
    _beta_list : list
        Inverse temperatures for the m-connected table.
    """

    _delta: Any = DEFAULTS["delta"]
    _temperature_grid: list = list(DEFAULTS["temperature_grid"])
    _temperature: float = DEFAULTS["temperature"]
    _sizes: list = list(DEFAULTS["sizes"])
    _p_grid: list = list(DEFAULTS["p_grid"])
    _trials: int = DEFAULTS["trials"]
    _seed: Optional[int] = DEFAULTS["seed"]
    _n_cor: int = DEFAULTS["n_cor"]
    _output_dir: str = DEFAULTS["output_dir"]
    _threads: Union[int, str] = DEFAULTS["threads"]
    _decoder: str = DEFAULTS["decoder"]
    _bootstrap: int = DEFAULTS["bootstrap"]
    _m_list: list = list(DEFAULTS["m_list"])
    _beta_list: list = list(DEFAULTS["beta_list"])

    @classmethod
    def define_config(
        cls,
        config_dict: dict = {},
        config_path: Optional[Union[str, Path, List[Union[str, Path]]]] = None,
    ):
        """defines the config file.

        The config can be loaded from a supplied dictionary
        or from one or more paths, with the dictionary taking
        precedence and later files overriding earlier ones.
        The intention in using a classmethod is that the config
        can be imported at any stage in a process after
        initialisation without reloading.

        Parameters
        ----------
        config_dict : dict
            A dictionary containing the config.
        config_path : str or list
            The config file location, or a list of locations merged
            in order."""
        config: dict = {}
        if config_path is not None:
            paths = [config_path] if isinstance(config_path, (str, Path)) else list(config_path)
            try:
                config = load_and_merge(paths)
            except (OSError, ValueError, TypeError) as e:
                _fail(f"cannot read config file {', '.join(map(str, paths))}: {e}")
        UpdateDict(config, copy.deepcopy(config_dict))
        cls.update_config(**config)

    @classmethod
    def update_config(cls, **kwargs):
        """
        Updates the config from given key word arguments.

        As Config utilises classmethods an classmethod is
        required to update it.

        Parameters
        ----------
        kwargs : dict, optional
            Key is attribute, value will be set.

        Raises
        ------
        ConfigurationError
            If a key is not a configuration field.
        """
        for key, val in kwargs.items():
            if key not in DEFAULTS:
                _fail(f"'{key}' is not a configuration field")
            setattr(cls, key, val)

    @classmethod
    def reset(cls):
        """Restores every field to its default value."""
        cls.update_config(**copy.deepcopy(DEFAULTS))

    @classmethod
    def to_dict(cls) -> dict:
        """Converts the configuration into a dictionary format.

        Returns
        -------
        dict
            A dictionary containing every configuration field
            in a json serialisable form.
        """
        return {key: encoder(getattr(cls, f"_{key}")) for key in DEFAULTS}

    @classmethod
    def reproducible_dict(cls) -> dict:
        """The configuration embedded in outputs.

        The worker count and the output directory are left out as they
        never change the numbers written, so runs with different thread
        counts produce identical files.

        Returns
        -------
        dict
            The configuration without the threads and output_dir fields.
        """
        config = cls.to_dict()
        config.pop("threads")
        config.pop("output_dir")
        return config

    @classmethod
    def use_output_dir(cls):
        """Creates the output directory and moves the run log
        into it."""
        start_message = (
            f"Configuration Details\n\n{pprint.pformat(cls.to_dict(), indent=4)}"
        )
        cls.output_dir.mkdir(parents=True, exist_ok=True)
        change_handler(cls.output_dir / "run.log")
        run_log.info(start_message)


class BaseConfig(BaseConfigMethods, metaclass=MetaConfig):
    """
    Having a configuration that can be shared across all stages
    of the pipeline is key to reproducible runs. The configuration
    can be imported without initialisation and the data is shared
    by using it.
    """

    pass


class BaseFramework:
    """A base framework class that contains a config attribute
    that can be referenced by thermal_cluster or other codes.

    Attributes
    ----------
    _configuration : BaseConfig
        The configuration that will be used throughout thermal_cluster.
    """

    _configuration = BaseConfig


class BaseClass:
    """
    Results of every stage can be written to a serialisable
    dictionary so they can be embedded in a json report or
    logged.
    """

    def to_dict(self, exclusions: list = []) -> dict:
        """
        Exports the data of the class as a dictionary.

        Parameters
        ----------
        exclusions : list, optional
            A list of attribute strings to be excluded from
            the dump to dictionary.

        Returns
        -------
        dict
            A dictionary containing the class data.
        """
        dump = {}
        for (name, value) in self.__dict__.items():
            if name not in exclusions and not name.startswith("_"):
                dump[name] = encoder(value)
        return dump

    def __repr__(self) -> str:
        fields = ", ".join(f"{key}={val!r}" for key, val in self.to_dict().items())
        return f"{self.__class__.__name__}({fields})"


def delta_in_kelvin(delta: Any) -> Optional[Any]:
    """Converts an energy scale into the equivalent temperature.

    Parameters
    ----------
    delta : Union[float, Quantity]
        The energy scale.

    Returns
    -------
    Quantity or None
        delta / k_B in kelvin, None when delta has no units.
    """
    if not hasattr(delta, "units") or delta.dimensionless:
        return None
    return (delta / Q_(1, "boltzmann_constant")).to("kelvin")
