from pathlib import Path

from _errors import EdgeListSyntaxError, InputError
from _network import Network, make_network


class EdgeListParser:
    """Parser for the edge-list network format.

    `SOURCE id ...` and `SINK id ...` header lines come first, followed
    by one `u v c` line per edge. Everything after `#` is a comment.
    """

    def __init__(self, src: str) -> None:
        """Initialize the parser with the source text."""
        self.src, self.i, self.n, self.line = src, 0, len(src), 1
        self.source: list[int] = []
        self.sink: list[int] = []
        self.edges: list[tuple[int, int, float]] = []

    def peek(self) -> str:
        """Return the next character without consuming it."""
        return self.src[self.i] if self.i < self.n else ""

    def consume(self) -> str:
        """Consume the next character and return it."""
        char = self.peek()
        self.i += 1
        self.line += char == "\n"
        return char

    def skip_blanks(self) -> None:
        """Skip spaces and tabs, and a trailing comment, on this line."""
        while self.peek() in (" ", "\t", "\r"):
            self.consume()

        if self.peek() == "#":
            while self.peek() not in ("", "\n"):
                self.consume()

    def at_line_end(self) -> bool:
        """Check whether only blanks and comments remain on the line."""
        self.skip_blanks()
        return self.peek() in ("", "\n")

    def error(self, message: str) -> EdgeListSyntaxError:
        """Build an error for the current line."""
        return EdgeListSyntaxError(message, self.line)

    def parse(self) -> Network:
        """Parse the whole text into a network."""
        while self.i < self.n:
            self.parse_line()

        if not self.source or not self.sink:
            raise self.error("missing SOURCE or SINK header")

        try:
            return make_network(self.edges, self.source, self.sink)

        except InputError as e:
            raise self.error(str(e)) from e

    def parse_line(self) -> None:
        """Parse one header line, edge line, or blank line."""
        if self.at_line_end():
            self.consume()
            return

        word = self.parse_word()

        if word in ("SOURCE", "SINK"):
            if self.edges:
                raise self.error(f"{word} header after the first edge")

            ids = self.parse_ids()

            if not ids:
                raise self.error(f"{word} needs at least one vertex id")

            (self.source if word == "SOURCE" else self.sink).extend(ids)

        else:
            u = self.to_vertex(word)
            self.skip_blanks()
            v = self.to_vertex(self.parse_word())
            self.skip_blanks()
            c = self.parse_number()
            self.edges.append((u, v, c))

        if not self.at_line_end():
            raise self.error(f"unexpected '{self.peek()}'")

        self.consume()

    def parse_word(self) -> str:
        """Parse a run of non-blank characters."""
        self.skip_blanks()
        start = self.i

        while self.peek() not in ("", " ", "\t", "\r", "\n", "#"):
            self.consume()

        if start == self.i:
            raise self.error("unexpected end of line")

        return self.src[start : self.i]

    def parse_ids(self) -> list[int]:
        """Parse the vertex ids of a header line."""
        ids = []

        while not self.at_line_end():
            ids.append(self.to_vertex(self.parse_word()))

        return ids

    def to_vertex(self, word: str) -> int:
        """Convert a word to a nonnegative integer vertex id."""
        if not word.isdigit():
            raise self.error(f"invalid vertex id '{word}'")

        return int(word)

    def parse_number(self) -> float:
        """Parse a decimal conductance."""
        word = self.parse_word()

        try:
            value = float(word)

        except ValueError:
            raise self.error(f"invalid conductance '{word}'") from None

        if not value >= 0 or value == float("inf"):
            raise self.error(f"conductance must be finite and >= 0: {word}")

        return value


def parse_edge_list(text: str) -> Network:
    """Parse edge-list text into a network."""
    return EdgeListParser(text).parse()


def read_edge_list(path: str | Path) -> Network:
    """Read an edge-list file."""
    return parse_edge_list(Path(path).read_text(encoding="utf-8"))


def write_edge_list(net: Network) -> str:
    """Serialize a network in the edge-list format."""
    lines = [
        "SOURCE " + " ".join(str(v) for v in sorted(net.source)),
        "SINK " + " ".join(str(v) for v in sorted(net.sink)),
    ]
    lines += [f"{u} {v} {c!r}" for u, v, c in net.edges]
    return "\n".join(lines) + "\n"
