"""Headline-to-evidence retrieval: search backends, URL filtering, polite
fetching and main-content extraction.

Search is a small interface with two implementations: a fixture backend
that reads query->URL mappings from a local JSONL file, and a generic
JSON-over-HTTP remote. Fetching follows redirects (5 hops), truncates
bodies at a byte cap and honors a per-host minimum interval that is safe
under concurrent use. Extraction builds a lightweight element tree with
the stdlib HTML parser, keeps text-bearing block elements of the densest
content region, drops link-heavy boilerplate and short sentence
fragments, and gates the result on an article heuristic (at least 3
sentences and 80 word tokens).

Known gap: robots.txt is not consulted; per-host pacing is the only
politeness mechanism for now.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from html.parser import HTMLParser
from importlib import resources
from pathlib import Path
from typing import Any, Protocol
from urllib.parse import parse_qsl, urlencode, urlsplit, urlunsplit

import requests

from .corpus import CandidateUrl, Verdict
from .textproc import clean_text, split_sentences, tokenize

__all__ = [
    "SearchBackend",
    "FixtureSearchBackend",
    "RemoteSearchBackend",
    "SearchError",
    "UrlFilterPolicy",
    "FetchPolicy",
    "FetchResult",
    "FetchError",
    "Fetcher",
    "HostRateLimiter",
    "ExtractedArticle",
    "NonArticleError",
    "search",
    "classify_url",
    "fetch",
    "extract_article",
    "canonicalize_url",
    "default_denylist",
    "load_denylist",
    "search_backend_from_dict",
]


class SearchError(Exception):
    """The search backend is unreachable or misconfigured."""


class SearchBackend(Protocol):
    def results(self, query: str, k: int) -> list[tuple[str, int]]:
        """Ordered (url, rank) hits for *query*, ranks 1..k strictly increasing."""
        ...


def _normalize_query(query: str) -> str:
    return " ".join(query.split())


class FixtureSearchBackend:
    """Reads query->URL mappings from a JSONL file of {"query", "urls"}.

    Lookup is exact after whitespace normalization; unknown queries return
    no hits.
    """

    def __init__(self, path: str | Path):
        self._mapping: dict[str, list[str]] = {}
        path = Path(path)
        if not path.exists():
            raise SearchError(f"fixture search file not found: {path}")
        for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            try:
                entry = json.loads(line)
                query = _normalize_query(str(entry["query"]))
                urls = [str(u) for u in entry["urls"]]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise SearchError(f"fixture search file line {line_no}: {exc}")
            self._mapping[query] = urls

    def results(self, query: str, k: int) -> list[tuple[str, int]]:
        urls = self._mapping.get(_normalize_query(query), [])
        return [(url, rank) for rank, url in enumerate(urls[:k], start=1)]


class RemoteSearchBackend:
    """POST {"query", "k"} -> {"results": [{"url", "rank"}]}."""

    def __init__(self, endpoint: str, timeout_seconds: float = 10.0):
        if not endpoint:
            raise SearchError("remote search backend requires an endpoint")
        self.endpoint = endpoint
        self.timeout_seconds = timeout_seconds

    def results(self, query: str, k: int) -> list[tuple[str, int]]:
        try:
            response = requests.post(
                self.endpoint, json={"query": query, "k": k}, timeout=self.timeout_seconds
            )
        except requests.RequestException as exc:
            raise SearchError(f"search backend unreachable: {exc}")
        if response.status_code != 200:
            raise SearchError(f"search backend returned HTTP {response.status_code}")
        try:
            body = response.json()
            hits = [(str(r["url"]), int(r["rank"])) for r in body["results"]]
        except (ValueError, KeyError, TypeError) as exc:
            raise SearchError(f"malformed search response: {exc}")
        return hits


def search_backend_from_dict(d: dict[str, Any]) -> SearchBackend:
    kind = str(d.get("kind", "")).upper()
    if kind == "FIXTURE":
        return FixtureSearchBackend(d["path"])
    if kind == "REMOTE":
        return RemoteSearchBackend(
            d["endpoint"], timeout_seconds=float(d.get("timeout_seconds", 10.0))
        )
    raise SearchError(f"unknown search backend kind {d.get('kind')!r}")


def load_denylist(path: str | Path) -> frozenset[str]:
    """One lowercase host suffix per line, ``#`` comments."""
    hosts = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip().lower()
        if line and not line.startswith("#"):
            hosts.add(line)
    return frozenset(hosts)


def default_denylist() -> frozenset[str]:
    source = resources.files("newsenrich.data").joinpath("denylist.txt")
    hosts = set()
    for line in source.read_text(encoding="utf-8").splitlines():
        line = line.strip().lower()
        if line and not line.startswith("#"):
            hosts.add(line)
    return frozenset(hosts)


@dataclass
class UrlFilterPolicy:
    denylist_hosts: frozenset[str] = field(default_factory=default_denylist)
    max_urls_per_query: int = 10
    require_https: bool = False

    def __post_init__(self) -> None:
        if self.max_urls_per_query < 1:
            raise ValueError("max_urls_per_query must be positive")
        self.denylist_hosts = frozenset(h.lower() for h in self.denylist_hosts)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "UrlFilterPolicy":
        kwargs: dict[str, Any] = {}
        if "denylist_hosts" in d:
            kwargs["denylist_hosts"] = frozenset(d["denylist_hosts"])
        elif "denylist_path" in d:
            kwargs["denylist_hosts"] = load_denylist(d["denylist_path"])
        if "max_urls_per_query" in d:
            kwargs["max_urls_per_query"] = int(d["max_urls_per_query"])
        if "require_https" in d:
            kwargs["require_https"] = bool(d["require_https"])
        return cls(**kwargs)


@dataclass
class FetchPolicy:
    timeout_seconds: float = 10.0
    max_body_bytes: int = 2 * 1024 * 1024
    per_host_min_interval_ms: int = 1000
    max_parallel_fetches: int = 8
    user_agent: str = "newsenrich/0.1 (+article enrichment pipeline)"

    def __post_init__(self) -> None:
        if self.timeout_seconds <= 0:
            raise ValueError("timeout_seconds must be positive")
        if self.max_body_bytes <= 0:
            raise ValueError("max_body_bytes must be positive")
        if self.per_host_min_interval_ms < 0:
            raise ValueError("per_host_min_interval_ms must be non-negative")
        if self.max_parallel_fetches < 1:
            raise ValueError("max_parallel_fetches must be positive")

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "FetchPolicy":
        kwargs = {k: d[k] for k in (
            "timeout_seconds",
            "max_body_bytes",
            "per_host_min_interval_ms",
            "max_parallel_fetches",
            "user_agent",
        ) if k in d}
        return cls(**kwargs)


def canonicalize_url(url: str) -> str:
    """Stable form for deduplication: lowercase scheme+host, no fragment,
    tracking query parameters (utm_*) removed."""
    parts = urlsplit(url)
    query = urlencode(
        [(k, v) for k, v in parse_qsl(parts.query, keep_blank_values=True)
         if not k.lower().startswith("utm_")]
    )
    return urlunsplit(
        (parts.scheme.lower(), parts.netloc.lower(), parts.path, query, "")
    )


def _host_of(url: str) -> str | None:
    try:
        return urlsplit(url).hostname
    except ValueError:
        return None


def host_in_denylist(host: str, denylist: frozenset[str]) -> bool:
    host = host.lower()
    return any(host == entry or host.endswith("." + entry) for entry in denylist)


def search(
    backend: SearchBackend, headline: str, policy: UrlFilterPolicy
) -> list[CandidateUrl]:
    """Query the backend and return deduplicated, rank-ordered candidates.

    Duplicates (after canonicalization) keep the best rank; at most
    ``max_urls_per_query`` candidates come back, all UNCHECKED.
    """
    if not headline or not headline.strip():
        raise SearchError("headline must be non-empty")
    hits = backend.results(headline, policy.max_urls_per_query)
    seen: set[str] = set()
    candidates: list[CandidateUrl] = []
    for url, rank in sorted(hits, key=lambda h: h[1]):
        canonical = canonicalize_url(url)
        if canonical in seen:
            continue
        seen.add(canonical)
        candidates.append(CandidateUrl(url=url, rank=rank, verdict=Verdict.UNCHECKED))
        if len(candidates) >= policy.max_urls_per_query:
            break
    return candidates


class FetchError(Exception):
    """Fetch failure with a stable error code.

    Codes: TIMEOUT, HTTP_STATUS, TOO_MANY_REDIRECTS, OVERSIZED_BODY,
    NETWORK, INVALID_URL.
    """

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


@dataclass
class FetchResult:
    body: bytes
    final_url: str
    status: int


class HostRateLimiter:
    """Reservation-based per-host spacing, safe under concurrent callers."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._next_slot: dict[str, float] = {}

    def wait(self, host: str, min_interval_s: float) -> None:
        if min_interval_s <= 0:
            return
        with self._lock:
            now = time.monotonic()
            start = max(now, self._next_slot.get(host, 0.0))
            self._next_slot[host] = start + min_interval_s
        delay = start - now
        if delay > 0:
            time.sleep(delay)


_default_limiter = HostRateLimiter()


def fetch(
    url: str,
    policy: FetchPolicy,
    limiter: HostRateLimiter | None = None,
    session: requests.Session | None = None,
) -> FetchResult:
    """GET *url* politely: per-host spacing, <=5 redirect hops, body capped
    at ``max_body_bytes`` (a declared larger Content-Length is refused)."""
    parts = urlsplit(url)
    if parts.scheme not in ("http", "https") or not parts.netloc:
        raise FetchError("INVALID_URL", f"not an absolute http(s) URL: {url!r}")
    host = parts.hostname or parts.netloc
    (limiter or _default_limiter).wait(host, policy.per_host_min_interval_ms / 1000.0)

    owns_session = session is None
    sess = session or requests.Session()
    sess.max_redirects = 5
    try:
        response = sess.get(
            url,
            timeout=policy.timeout_seconds,
            stream=True,
            allow_redirects=True,
            headers={"User-Agent": policy.user_agent},
        )
    except requests.Timeout as exc:
        raise FetchError("TIMEOUT", str(exc))
    except requests.TooManyRedirects as exc:
        raise FetchError("TOO_MANY_REDIRECTS", str(exc))
    except requests.RequestException as exc:
        raise FetchError("NETWORK", str(exc))
    finally:
        if owns_session:
            sess.close()

    with response:
        if not 200 <= response.status_code < 300:
            raise FetchError("HTTP_STATUS", f"HTTP {response.status_code} for {url}")
        declared = response.headers.get("Content-Length")
        if declared is not None:
            try:
                if int(declared) > policy.max_body_bytes:
                    raise FetchError(
                        "OVERSIZED_BODY",
                        f"declared {declared} bytes > cap {policy.max_body_bytes}",
                    )
            except ValueError:
                pass
        chunks: list[bytes] = []
        received = 0
        try:
            for chunk in response.iter_content(chunk_size=65536):
                if not chunk:
                    continue
                remaining = policy.max_body_bytes - received
                if remaining <= 0:
                    break
                if len(chunk) > remaining:
                    chunks.append(chunk[:remaining])
                    received = policy.max_body_bytes
                    break
                chunks.append(chunk)
                received += len(chunk)
        except requests.Timeout as exc:
            raise FetchError("TIMEOUT", str(exc))
        except requests.RequestException as exc:
            raise FetchError("NETWORK", str(exc))
        return FetchResult(body=b"".join(chunks), final_url=response.url, status=response.status_code)


class Fetcher:
    """Shared-session fetcher bounding parallelism per its policy."""

    def __init__(self, policy: FetchPolicy, limiter: HostRateLimiter | None = None):
        self.policy = policy
        self.limiter = limiter or HostRateLimiter()
        self._slots = threading.BoundedSemaphore(policy.max_parallel_fetches)
        self._local = threading.local()

    def _session(self) -> requests.Session:
        sess = getattr(self._local, "session", None)
        if sess is None:
            sess = requests.Session()
            self._local.session = sess
        return sess

    def fetch(self, url: str) -> FetchResult:
        with self._slots:
            return fetch(url, self.policy, limiter=self.limiter, session=self._session())


class NonArticleError(Exception):
    """Extraction determined the page is not an article."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass
class ExtractedArticle:
    title: str
    body: str


_VOID_TAGS = frozenset(
    "area base br col embed hr img input link meta param source track wbr".split()
)
_SKIP_TAGS = frozenset("script style noscript template svg".split())
_BLOCK_TAGS = frozenset(["p", "h1", "h2", "h3", "h4", "h5", "h6", "li", "td", "th"])
_TERMINAL = ".!?"
_CLOSERS = "\"'”’)]"


class _Node:
    __slots__ = ("tag", "parent", "children", "order")

    def __init__(self, tag: str, parent: "_Node | None", order: int):
        self.tag = tag
        self.parent = parent
        self.children: list[Any] = []  # _Node or str
        self.order = order

    def iter_text(self, inside_link: bool = False):
        for child in self.children:
            if isinstance(child, str):
                yield child, inside_link
            else:
                yield from child.iter_text(inside_link or child.tag == "a")

    def text(self) -> str:
        return " ".join(part for part, _ in self.iter_text())

    def link_text(self) -> str:
        return " ".join(part for part, linked in self.iter_text() if linked)

    def walk(self):
        yield self
        for child in self.children:
            if isinstance(child, _Node):
                yield from child.walk()

    def has_ancestor(self, other: "_Node") -> bool:
        node = self.parent
        while node is not None:
            if node is other:
                return True
            node = node.parent
        return False


class _TreeBuilder(HTMLParser):
    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.root = _Node("#root", None, 0)
        self._stack = [self.root]
        self._order = 0
        self._skip_depth = 0
        self._in_title = False
        self.title_parts: list[str] = []

    def handle_starttag(self, tag, attrs):
        if tag in _SKIP_TAGS:
            self._skip_depth += 1
            return
        if self._skip_depth:
            return
        if tag == "title":
            self._in_title = True
            return
        if tag in _VOID_TAGS:
            return
        self._order += 1
        node = _Node(tag, self._stack[-1], self._order)
        self._stack[-1].children.append(node)
        self._stack.append(node)

    def handle_endtag(self, tag):
        if tag in _SKIP_TAGS:
            self._skip_depth = max(0, self._skip_depth - 1)
            return
        if self._skip_depth:
            return
        if tag == "title":
            self._in_title = False
            return
        if tag in _VOID_TAGS:
            return
        for i in range(len(self._stack) - 1, 0, -1):
            if self._stack[i].tag == tag:
                del self._stack[i:]
                break

    def handle_data(self, data):
        if self._skip_depth:
            return
        if self._in_title:
            self.title_parts.append(data)
            return
        if data.strip():
            self._stack[-1].children.append(data)


def _block_text(node: _Node) -> str:
    return clean_text(node.text())


def _is_fragment(text: str) -> bool:
    if len(tokenize(text)) >= 4:
        return False
    return not text.rstrip(_CLOSERS).rstrip().endswith(tuple(_TERMINAL))


def extract_article(html: bytes | str, base_url: str = "") -> ExtractedArticle:
    """Reduce an HTML page to its main article text.

    Raises :class:`NonArticleError` when the page has no dense content
    region that passes the article heuristic (>= 3 sentences and >= 80
    word tokens after boilerplate and fragment removal).
    """
    if isinstance(html, bytes):
        text = html.decode("utf-8", errors="replace")
    else:
        text = html
    if not text.strip():
        raise NonArticleError("empty document")

    builder = _TreeBuilder()
    try:
        builder.feed(text)
        builder.close()
    except Exception as exc:  # parser wedged on hostile input
        raise NonArticleError(f"unparseable HTML: {exc}")

    blocks: list[tuple[_Node, str]] = []
    for node in builder.root.walk():
        if node.tag not in _BLOCK_TAGS:
            continue
        if node.parent is not None and any(
            anc.tag in _BLOCK_TAGS for anc in _ancestors(node)
        ):
            continue  # keep outermost candidate blocks only
        raw = node.text()
        content = clean_text(raw)
        if not content:
            continue
        link_text = clean_text(node.link_text())
        if len(content) > 0 and len(link_text) / len(content) > 0.5:
            continue  # boilerplate: link-dominated block
        if _is_fragment(content):
            continue  # incomplete sentence / stray heading
        blocks.append((node, content))

    if not blocks:
        raise NonArticleError("no content blocks found")

    # Densest region: blocks vote for their parent (full weight) and
    # grandparent (half weight); the best-scoring container wins.
    scores: dict[_Node, float] = {}
    order: dict[_Node, int] = {}
    for node, content in blocks:
        weight = float(len(tokenize(content)))
        parent = node.parent
        if parent is not None:
            scores[parent] = scores.get(parent, 0.0) + weight
            order.setdefault(parent, parent.order)
            grand = parent.parent
            if grand is not None:
                scores[grand] = scores.get(grand, 0.0) + weight / 2.0
                order.setdefault(grand, grand.order)
    region = max(scores, key=lambda n: (scores[n], -order[n]))

    body = " ".join(
        content for node, content in blocks if node is region or node.has_ancestor(region)
    )
    sentences = split_sentences(body)
    words = tokenize(body)
    if len(sentences) < 3 or len(words) < 80:
        raise NonArticleError(
            f"below article threshold ({len(sentences)} sentences, {len(words)} words)"
        )

    title = clean_text(" ".join(builder.title_parts))
    if not title:
        for node in builder.root.walk():
            if node.tag == "h1":
                title = clean_text(node.text())
                if title:
                    break
    return ExtractedArticle(title=title, body=body)


def _ancestors(node: _Node):
    current = node.parent
    while current is not None:
        yield current
        current = current.parent


def classify_url(
    url: CandidateUrl | str,
    policy: UrlFilterPolicy,
    page: FetchResult | FetchError | None = None,
) -> Verdict:
    """Verdict for a candidate URL; failures map to verdicts, not errors.

    Without a fetched page only structural checks run, so a passing URL
    stays UNCHECKED rather than being presumed VALID.
    """
    raw = url.url if isinstance(url, CandidateUrl) else url
    parts = urlsplit(raw)
    if parts.scheme not in ("http", "https") or not parts.hostname:
        return Verdict.DENYLISTED
    if policy.require_https and parts.scheme != "https":
        return Verdict.DENYLISTED
    if host_in_denylist(parts.hostname, policy.denylist_hosts):
        return Verdict.DENYLISTED
    if page is None:
        return Verdict.UNCHECKED
    if isinstance(page, FetchError):
        return Verdict.FETCH_FAILED
    try:
        extract_article(page.body, page.final_url)
    except NonArticleError:
        return Verdict.NON_ARTICLE
    return Verdict.VALID
