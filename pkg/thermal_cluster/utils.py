from collections import abc
from fractions import Fraction
import itertools
import logging
import os
from pathlib import Path
import tempfile
from typing import Any, Iterable, Optional, Union

import json
import numpy as np
import pandas as pd
from tabulate import tabulate

from thermal_cluster import (
    run_log,
    nice_format,
    info_handler,
    base_handler,
    console_handler,
)


def encoder(obj: Any) -> Any:
    """An encoder to ensure all outputs are serialisable.

    Exact rationals are written as strings ("-2/5") so that a
    report can be compared symbolically after being reloaded.

    Parameters
    ----------
    obj : Any
        An instance of an object which will be
        converted to a serialisable if exist in list.

    Returns
    -------
    Any
        The serialisable version of the input instance, if
        the type is specified in the list.
    """
    if hasattr(obj, "to_dict"):
        obj_dict = obj.to_dict()
        return {encoder(key): encoder(val) for key, val in obj_dict.items()}
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if hasattr(obj, "units") and hasattr(obj, "magnitude"):
        return f"{obj.magnitude} {obj.units}"
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, str):
        return str(obj)
    if isinstance(obj, (list, tuple)):
        return [encoder(item) for item in obj]
    if isinstance(obj, np.ndarray):
        return [encoder(item) for item in obj.tolist()]
    if isinstance(obj, dict):
        return {encoder(key): encoder(val) for key, val in obj.items()}
    return obj


def change_handler(new_path: Union[str, Path]):
    """Changes the logging handler.

    When running a sweep, it is beneficial to have the log
    for a run in the output directory of that run. This is
    done by changing the logging handler path.

    Parameters
    ----------
    new_path : str
        The new path for the run log to be stored."""
    Path(new_path).parent.mkdir(parents=True, exist_ok=True)
    for handler in list(run_log.handlers):
        if handler not in (base_handler, console_handler):
            handler.flush()
            handler.close()
    run_log.handlers.clear()
    info_handler.flush()
    info_handler.close()
    new_info_handler = logging.FileHandler(Path(new_path), "w")
    new_info_handler.setLevel(logging.INFO)
    new_info_handler.setFormatter(nice_format)

    run_log.addHandler(base_handler)
    run_log.addHandler(console_handler)
    run_log.addHandler(new_info_handler)


def write_atomic(path: Union[str, Path], text: str):
    """Writes text to a file so that the file either holds the
    complete text or is left untouched.

    The text is written to a temporary file in the destination
    directory which is then renamed over the target.

    Parameters
    ----------
    path : Union[str, Path]
        The destination file.
    text : str
        The content to be written.

    Raises
    ------
    OSError
        If the destination directory cannot be written to.
    """
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(
            prefix=f".{path.name}.", suffix=".tmp", dir=path.parent
        )
    except OSError as e:
        run_log.error(f"cannot write to {path}: {e}")
        raise
    try:
        with os.fdopen(fd, "w", newline="\n") as f:
            f.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.remove(tmp_name)
        raise
    run_log.debug(f"wrote {path}")


def dumps_json(data: Any) -> str:
    """Dumps data as deterministic, indented json.

    Parameters
    ----------
    data : Any
        Anything the encoder can make serialisable.

    Returns
    -------
    str
        The json text with sorted keys and a trailing new line.
    """
    return json.dumps(encoder(data), indent=2, sort_keys=True) + "\n"


def csv_with_metadata(frame: pd.DataFrame, metadata: dict) -> str:
    """Renders a table as csv preceded by '#' metadata lines.

    Floats are written with 12 significant digits, the decimal
    point is '.', and lines end with '\\n'.

    Parameters
    ----------
    frame : pd.DataFrame
        The table to be rendered, the columns are the header.
    metadata : dict
        Key/value pairs written one per line before the header.

    Returns
    -------
    str
        The csv text.
    """
    lines = [
        f"# {key}: {json.dumps(encoder(val), sort_keys=True)}"
        for key, val in metadata.items()
    ]
    body = frame.to_csv(index=False, float_format="%.12g", lineterminator="\n")
    return "\n".join(lines) + "\n" + body


class PrintTable:
    """Prints tables to a terminal in a readable way.

    Long entries are split over several lines so that the
    table fits the width of the terminal.
    """

    def __init__(self, frame: pd.DataFrame):
        self.frame = frame

    @property
    def header(self) -> Iterable:
        """The header of the table that will be printed.

        Returns
        -------
        list
            The column names of the wrapped table.
        """
        return list(self.frame.columns)

    def get_max_column_width(self) -> Optional[int]:
        """Gets the maximum column size for printing of
        a tabular dataframe.

        Returns
        -------
        int
            The maximum column size for a given terminal width.
        None
            If an OSError is raised (due to no terminal) or
            a ZeroDivisionError is raised (no columns).
        """
        try:
            terminal_size = os.get_terminal_size().columns
            return int(terminal_size / len(self.header))
        except (
            OSError,
            ZeroDivisionError,
        ):
            return None

    def new_line_in_string(self, input: Any, max_character: Optional[int] = None) -> Any:
        """Splits the input into multiple lines based on a supplied
        max character interger.

        Parameters
        ----------
        input : Any
            The item to be split.
        max_character : int, optional
            The maximum number of characters before adding the new
            line, by default None.

        Returns
        -------
        Any
            The item with the split accross new lines added.
        """
        if max_character is not None and isinstance(input, str):
            lines = []
            for i in range(0, len(input), max_character):
                lines.append(input[i : i + max_character])
            return "\n".join(lines)
        return input

    def __str__(self) -> str:
        max_character = self.get_max_column_width()
        rows = [
            [self.new_line_in_string(val, max_character) for val in row]
            for row in self.frame.itertuples(index=False)
        ]
        return f"\n{tabulate(rows, headers=self.header, tablefmt='fancy_grid', floatfmt='.6g')}"


class UpdateDict:
    """Updating a dictionary with more control
    over than the inbuilt is important when
    merging configuration files.

    This function allows for that control."""

    def __init__(self, main: dict, *args):
        """Initialises the update dictionary.

        Mutability is used to get this class to
        work, thefore, losing that mutability stops it.

        Parameters
        ----------
        main : dict
            The main dictionary which will be updated.
        args : tuple
            The input dictionaries which main will be
            updated with.
        """
        self.main = main
        self.input = args
        self.build()

    def build(self):
        """Updates the main dictionary with the input
        attribute."""
        self.update_main(self.main, self.input)

    def unique_keys(self, input_tuple: tuple) -> Iterable:
        """Defines the unique keys in all the input dict.

        Parameters
        ----------
        input_tuple : dict
            Tuple of input dictionaries.

        Returns
        -------
        dict_keys
            The unique input keys."""
        temp: dict = {}
        for val in input_tuple:
            temp.update(val)
        return temp.keys()

    def update_main(self, main: dict, input_tuple: tuple):
        """Updates the main dictionary with the input
        dictionary.

        Parameters
        ----------
        main : dictionary
            The main dictionary which will be updated.
        input_tuple : tuple
            A tuple of input dictionaries.
        """
        unique = self.unique_keys(input_tuple)
        for key, data in itertools.product(unique, input_tuple):
            if key in main and key in data:
                self.update_key(main, key, data)
            elif key in data:
                main[key] = data[key]

    def update_key(self, main: dict, key: Union[str, int], data: dict):
        """Updates the data in the main dictionary
        with a key.

        Lists are replaced rather than extended as a grid in
        an override file is meant to supersede the default grid.

        Parameters
        ----------
        main : dictionary
            The main dictionary which will be updated.
        key : Union[str, int]
            The key in the main dictioanry which will
            have the value updated with data.
        data : dict
            The dictionary holding the new value.
        """
        main_type = type(main[key])
        if main_type == type(data[key]) and main_type == dict:
            self.update_main(main[key], (data[key],))
            return
        if (
            main[key] is not None
            and data[key] is not None
            and main_type != type(data[key])
            and not (
                isinstance(main[key], (int, float))
                and isinstance(data[key], (int, float))
            )
        ):
            run_log.warning(
                (
                    f"Data type changed in dictionary update.\n"
                    f"{key} data types\nmain={type(main[key])}"
                    f"\ndata={type(data[key])}"
                )
            )
        main[key] = data[key]


def load_and_merge(location_list: abc.Iterable) -> dict:
    """Merges multiple json dicts into a single dictionary.

    Later files take precedence over earlier ones.

    Parameters
    ----------
    location_list : list
        List of the locations of json which will
        be loaded and merged.

    Returns
    -------
    merged : dict
        A merged dictionary of all the json
        in the location list.

    Raises
    ------
    TypeError
        If a file does not hold a json object.
    """
    merged: dict = {}
    for path in location_list:
        with open(Path(path), "r") as f:
            dictionary = json.load(f)
        if not isinstance(dictionary, dict):
            msg = f"{path} must hold a json object"
            run_log.error(msg)
            raise TypeError(msg)
        UpdateDict(merged, dictionary)
    return merged
