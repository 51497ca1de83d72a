from typing import List, Optional, Tuple, Union
from pathlib import Path
import logging

import numpy as np
import pandas as pd

from app.core.errors import EmptyInput, ParseError
from app.schemas.series import MIN_OBSERVATIONS, MultiSeries, TimeSeries

logger = logging.getLogger(__name__)

TIME_COLUMN = "t"


class SeriesValidator:
    """Validator for tabular time series input"""

    @staticmethod
    def value_columns(frame: pd.DataFrame) -> List[str]:
        """All columns except an optional time column"""
        return [col for col in frame.columns if str(col).strip().lower() != TIME_COLUMN]

    @staticmethod
    def first_invalid_cell(raw: pd.Series) -> Optional[Tuple[int, str]]:
        """1-based data row and content of the first cell that is not a finite number"""
        numeric = pd.to_numeric(raw.str.strip(), errors="coerce")
        invalid = ~np.isfinite(numeric.to_numpy(dtype=float))
        if not invalid.any():
            return None
        position = int(np.argmax(invalid))
        return position + 1, str(raw.iloc[position])

    @staticmethod
    def validate_length(n: int) -> bool:
        return n >= MIN_OBSERVATIONS


def ingest_csv(path: Union[str, Path]) -> Union[TimeSeries, MultiSeries]:
    """Read a CSV with one header row into a univariate or multivariate series"""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Input file not found: {path}")

    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise EmptyInput(f"Input file is empty: {path}") from None
    except pd.errors.ParserError as e:
        raise ParseError(f"Malformed CSV in {path}: {e}") from None

    columns = SeriesValidator.value_columns(frame)
    if not columns:
        raise EmptyInput(f"No value columns in {path}", details={"columns": list(frame.columns)})
    if frame.empty:
        raise EmptyInput(f"No data rows in {path}")

    values = {}
    for column in columns:
        invalid = SeriesValidator.first_invalid_cell(frame[column].astype(str))
        if invalid is not None:
            row, content = invalid
            raise ParseError(
                f"Row {row}, column '{column}': '{content}' is not a finite number",
                row=row,
                column=str(column),
            )
        values[column] = pd.to_numeric(frame[column].str.strip()).to_numpy(dtype=float)

    n = len(frame)
    if not SeriesValidator.validate_length(n):
        raise EmptyInput(
            f"Need at least {MIN_OBSERVATIONS} observations, {path} has {n}",
            details={"rows": n},
        )

    logger.info(f"Read {n} rows and {len(columns)} value column(s) from {path}")
    if len(columns) == 1:
        return TimeSeries(values=values[columns[0]], name=str(columns[0]))
    return MultiSeries(values=np.column_stack([values[c] for c in columns]), names=[str(c) for c in columns])
