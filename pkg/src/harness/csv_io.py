"""
CSV-формат строк сканов: заголовок n,m,l,epsilon,x_variable,x_value,kind,value,
17 значащих цифр, LF, UTF-8; строки-комментарии начинаются с '#'
"""
import csv
import logging
import sys
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, TextIO

from pydantic import ValidationError

from src.exceptions import OutputError
from src.protocol.schemas import ScanRow

logger = logging.getLogger(__name__)

HEADER = ["n", "m", "l", "epsilon", "x_variable", "x_value", "kind", "value"]
COMMENT_PREFIX = "#"


def _format_float(value: float) -> str:
    return format(value, ".17g")


def _as_record(row: ScanRow) -> dict:
    return {
        "n": str(row.n),
        "m": str(row.m),
        "l": str(row.l),
        "epsilon": _format_float(row.epsilon),
        "x_variable": row.x_variable,
        "x_value": _format_float(row.x_value),
        "kind": row.kind.value,
        "value": _format_float(row.value),
    }


def emit(rows: Iterable[ScanRow], stream: TextIO, comments: Sequence[str] = ()):
    """
    Записывает строки скана в поток

    Args:
        rows(Iterable[ScanRow]): строки в порядке вывода
        stream(TextIO): открытый текстовый поток
        comments(Sequence[str]): строки комментариев перед заголовком
    """
    for comment in comments:
        stream.write(f"{COMMENT_PREFIX} {comment}\n")
    writer = csv.DictWriter(stream, fieldnames=HEADER, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(_as_record(row))


def parse(text: str) -> List[ScanRow]:
    """
    Разбирает CSV, пропуская строки-комментарии

    Args:
        text(str): содержимое файла

    Returns:
        List[ScanRow]: строки в порядке следования
    """
    lines = [line for line in text.splitlines() if not line.startswith(COMMENT_PREFIX)]
    reader = csv.DictReader(lines)
    if reader.fieldnames != HEADER:
        raise OutputError(f"Unexpected CSV header {reader.fieldnames}")
    try:
        return [ScanRow(**record) for record in reader]
    except ValidationError as exc:
        raise OutputError(f"Malformed CSV row: {exc}") from exc


def write_rows(rows: Sequence[ScanRow], path: Optional[Path] = None,
               comments: Sequence[str] = ()) -> Optional[Path]:
    """
    Записывает строки в файл или, если путь не задан, в stdout

    Args:
        rows(Sequence[ScanRow]): строки скана
        path(Optional[Path]): целевой файл; родительские каталоги создаются
        comments(Sequence[str]): комментарии '#'

    Returns:
        Optional[Path]: путь записанного файла
    """
    if path is None:
        emit(rows, sys.stdout, comments)
        return None
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as file:
            emit(rows, file, comments)
    except OSError as exc:
        raise OutputError(f"Cannot write {path}: {exc}") from exc
    logger.info("Wrote %d rows to %s", len(rows), path)
    return path


def read_rows(path: Path) -> List[ScanRow]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"Cannot read {path}: {exc}") from exc
    return parse(text)
