from csv import reader, writer
from dataclasses import asdict, dataclass
from io import StringIO
from json import dumps

from _config import CSV_DIGITS
from _errors import CapacityError

CSV_FIELDS = (
    "n", "cap", "kappa", "lower", "upper", "sweeps", "max_residual",
    "wall_seconds",
)


@dataclass(frozen=True, slots=True)
class RunRecord:
    """One computed capacity, as emitted by the command line."""

    d: int
    p: float
    n: int
    cap: float
    kappa: float | None
    lower: float
    upper: float
    sweeps: int
    max_residual: float
    wall_seconds: float

    def __post_init__(self) -> None:
        if not self.lower <= self.cap <= self.upper + 1e-9:
            raise CapacityError(
                f"record out of order: {self.lower!r} <= {self.cap!r} <= "
                f"{self.upper!r} fails"
            )


def format_number(x: float | int | None) -> str:
    """Decimal text that parses back to the same float."""
    if x is None:
        return ""

    return str(x) if isinstance(x, int) else f"{x:.{CSV_DIGITS}g}"


def csv_header() -> str:
    """The header line of a sweep table."""
    return ",".join(CSV_FIELDS) + "\n"


def csv_row(record: RunRecord) -> str:
    """One CSV line for a record, without d and p."""
    out = StringIO()
    writer(out, lineterminator="\n").writerow(
        [format_number(getattr(record, name)) for name in CSV_FIELDS]
    )
    return out.getvalue()


def parse_csv(text: str, d: int, p: float) -> list[RunRecord]:
    """Read a sweep table back; d and p are not part of the table."""
    rows = list(reader(StringIO(text)))

    if not rows or tuple(rows[0]) != CSV_FIELDS:
        raise CapacityError("not a sweep table")

    records = []

    for row in rows[1:]:
        value = dict(zip(CSV_FIELDS, row))
        records.append(
            RunRecord(
                d=d,
                p=p,
                n=int(value["n"]),
                cap=float(value["cap"]),
                kappa=float(value["kappa"]) if value["kappa"] else None,
                lower=float(value["lower"]),
                upper=float(value["upper"]),
                sweeps=int(value["sweeps"]),
                max_residual=float(value["max_residual"]),
                wall_seconds=float(value["wall_seconds"]),
            )
        )

    return records


def to_json(records: RunRecord | list[RunRecord]) -> str:
    """A flat object for one record, an array for several."""
    payload = (
        [asdict(r) for r in records]
        if isinstance(records, list)
        else asdict(records)
    )
    return dumps(payload, sort_keys=False) + "\n"
