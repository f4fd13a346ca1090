"""Simulated transmission: light encoder/decoder, channels, sender and receiver.

A stream is ``preamble | packet | packet | ...`` and ends when the writer
closes the channel.  Synchronous formats are checked against a shared
counter (symbols sent so far) and packet number; asynchronous formats are
split on end-of-packet markers.
"""

from __future__ import annotations

import logging
import queue
import socket
import time
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

from . import codec
from .cipher import EncryptedRecord, KeySchedule, decrypt, encrypt
from .codec import MangledSymbol
from .errors import DesyncError, FramingError, TransportError
from .framing import (
    COUNT_SIZE,
    EPM,
    MDI_SIZE,
    OI_SIZE,
    PREAMBLE_SIZE,
    Deframer,
    Ipr,
    Mdi,
    Packet,
    PacketFormat,
    decode_payload,
    build_preamble,
    decode_one,
    encode_packet,
    packet_ipr,
    parse_preamble,
    stuff,
)

log = logging.getLogger(__name__)

DEFAULT_BATCH = 256
READ_CHUNK = 65536

# Optional first async frame of a container file: b"K" + 8-byte key fingerprint.
# Its 9-byte unstuffed length can never be an async record payload (6 or 2 + 6n).
KEY_TAG = b"K"
KEY_TAG_SIZE = 9


# -- light encoder / decoder ----------------------------------------------------


class ChannelSymbol(NamedTuple):
    color: tuple[int, int, int]
    record: EncryptedRecord

    @property
    def hex(self) -> str:
        return "#{:02X}{:02X}{:02X}".format(*self.color)


def light_encode(record: EncryptedRecord) -> ChannelSymbol:
    """Turn an encrypted record into a channel symbol with a 24-bit color."""
    t = codec.demangle(record)
    return ChannelSymbol(tuple(v % 256 for v in t), record)


def light_decode(sym: ChannelSymbol) -> EncryptedRecord:
    return sym.record


# -- channels -------------------------------------------------------------------


class Channel:
    """Ordered, reliable byte pipe.  ``read`` returns ``b""`` once the writer closed."""

    def open(self):
        return self

    def write(self, data: bytes) -> None:
        raise NotImplementedError

    def read(self, n: int = READ_CHUNK) -> bytes:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __enter__(self):
        return self.open()

    def __exit__(self, *exc):
        self.close()


class MemoryChannel(Channel):
    """Thread-safe in-process channel for one writer and one reader."""

    def __init__(self):
        self._q: queue.Queue = queue.Queue()
        self._buf = b""
        self._eof = False

    def write(self, data):
        if data:
            self._q.put(bytes(data))

    def close(self):
        self._q.put(None)

    def read(self, n=READ_CHUNK):
        while not self._buf and not self._eof:
            chunk = self._q.get()
            if chunk is None:
                self._eof = True
            else:
                self._buf = chunk
        out, self._buf = self._buf[:n], self._buf[n:]
        return out


class FileChannel(Channel):
    """Raw stream stored in a file: written once, read back later."""

    def __init__(self, path, mode="r"):
        if mode not in ("r", "w"):
            raise ValueError("mode must be 'r' or 'w'")
        self.path = path
        self.mode = mode
        self._fh = None

    def open(self):
        if self._fh is None:
            try:
                self._fh = open(self.path, self.mode + "b")
            except OSError as exc:
                raise TransportError(f"cannot open {self.path}: {exc}") from exc
        return self

    def write(self, data):
        self.open()._fh.write(data)

    def read(self, n=READ_CHUNK):
        return self.open()._fh.read(n)

    def close(self):
        if self._fh is not None:
            self._fh.close()
            self._fh = None


class SocketChannel(Channel):
    def __init__(self, sock: socket.socket):
        self.sock = sock

    def write(self, data):
        try:
            self.sock.sendall(data)
        except OSError as exc:
            raise TransportError(f"channel write failed: {exc}") from exc

    def read(self, n=READ_CHUNK):
        try:
            return self.sock.recv(n)
        except OSError as exc:
            raise TransportError(f"channel read failed: {exc}") from exc

    def close(self):
        try:
            self.sock.shutdown(socket.SHUT_WR)
        except OSError:
            pass
        self.sock.close()


class Listener:
    """TCP listener handing out one :class:`SocketChannel` per accepted peer."""

    def __init__(self, host="127.0.0.1", port=0):
        self.sock = socket.create_server((host, port))
        self.host, self.port = self.sock.getsockname()[:2]

    def accept(self, timeout=None) -> SocketChannel:
        self.sock.settimeout(timeout)
        try:
            conn, _ = self.sock.accept()
        except OSError as exc:
            raise TransportError(f"accept failed: {exc}") from exc
        conn.settimeout(None)
        return SocketChannel(conn)

    def close(self):
        self.sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def connect(host, port, timeout=10.0) -> SocketChannel:
    """Connect to a listening receiver, retrying until ``timeout`` expires."""
    deadline = time.monotonic() + timeout
    while True:
        try:
            return SocketChannel(socket.create_connection((host, port), timeout=timeout))
        except OSError as exc:
            if time.monotonic() >= deadline:
                raise TransportError(f"cannot connect to {host}:{port}: {exc}") from exc
            time.sleep(0.05)


def parse_endpoint(endpoint: str) -> tuple[str, int]:
    host, sep, port = endpoint.rpartition(":")
    if not sep or not port.isdigit():
        raise TransportError(f"endpoint must be host:port, got {endpoint!r}")
    return host or "127.0.0.1", int(port)


# -- sender -----------------------------------------------------------------------


def frame_records(records, fmt, batch=DEFAULT_BATCH) -> list[Packet]:
    """Group records into packets, stamping counters for synchronous formats."""
    fmt = PacketFormat.parse(fmt)
    size = 1 if fmt.is_fine else batch
    packets = []
    for number, start in enumerate(range(0, len(records), size)):
        chunk = records[start : start + size]
        mdi = Mdi(start, number) if fmt.is_sync else None
        packets.append(Packet(fmt, chunk, mdi))
    return packets


def key_tag(fp: bytes) -> bytes:
    return stuff(KEY_TAG + fp) + bytes([EPM])


@dataclass
class TransmissionReport:
    format: PacketFormat
    symbols: int = 0
    packets: int = 0
    bytes_written: int = 0
    ipr: Ipr = field(default_factory=lambda: Ipr(0, 0, 0))
    channel_symbols: list = field(default_factory=list, repr=False)

    @property
    def ipr_ratio(self):
        return self.ipr.ratio if self.ipr.packet_bytes else None

    @property
    def wire_ipr_ratio(self):
        return self.ipr.wire_ratio if self.ipr.wire_bytes else None


def write_stream(channel: Channel, records, fmt, batch=DEFAULT_BATCH, fingerprint=None,
                 report: TransmissionReport | None = None) -> TransmissionReport:
    fmt = PacketFormat.parse(fmt)
    report = report or TransmissionReport(fmt)
    preamble = build_preamble(fmt)
    channel.write(preamble)
    report.bytes_written += len(preamble)
    if fingerprint is not None:
        if fmt.is_sync:
            raise FramingError("key tags only exist in asynchronous streams")
        tag = key_tag(fingerprint)
        channel.write(tag)
        report.bytes_written += len(tag)
    for packet in frame_records(list(records), fmt, batch):
        wire = encode_packet(packet)
        channel.write(wire)
        report.packets += 1
        report.symbols += len(packet.records)
        report.bytes_written += len(wire)
        report.ipr += packet_ipr(packet, len(wire))
    return report


def send(message: bytes, schedule: KeySchedule, fmt, channel: Channel,
         batch=DEFAULT_BATCH, close=True) -> TransmissionReport:
    """Encrypt ``message`` and push it through ``channel`` in packet format ``fmt``."""
    fmt = PacketFormat.parse(fmt)
    em = encrypt(message, schedule)
    symbols = [light_encode(r) for r in em.records]
    report = TransmissionReport(fmt, channel_symbols=symbols)
    try:
        write_stream(channel, [light_decode(s) for s in symbols], fmt, batch, report=report)
    finally:
        if close:
            channel.close()
    log.debug("sent %d symbols in %d packets", report.symbols, report.packets)
    return report


# -- receiver -----------------------------------------------------------------------


class SyncState:
    """Counters the receiver expects on the next synchronous packet."""

    def __init__(self):
        self.expected_counter = 0
        self.expected_packet = 0

    def check(self, packet: Packet) -> None:
        mdi = packet.mdi
        if mdi.counter != self.expected_counter:
            raise DesyncError("counter", self.expected_counter, mdi.counter)
        if mdi.packet_number != self.expected_packet:
            raise DesyncError("packet number", self.expected_packet, mdi.packet_number)
        self.expected_counter += len(packet.records)
        self.expected_packet += 1


class PacketReader:
    """Pull packets out of a channel according to the stream's preamble."""

    def __init__(self, channel: Channel):
        self.channel = channel
        self.format: PacketFormat | None = None
        self.fingerprint: bytes | None = None
        self.offset = 0
        self._buf = b""
        self._eof = False

    def _fill(self) -> bool:
        if self._eof:
            return False
        chunk = self.channel.read(READ_CHUNK)
        if not chunk:
            self._eof = True
            return False
        self._buf += chunk
        return True

    def _take(self, n: int, allow_eof=False) -> bytes | None:
        while len(self._buf) < n:
            if not self._fill():
                if allow_eof and not self._buf:
                    return None
                raise FramingError("truncated packet", self.offset + len(self._buf))
        out, self._buf = self._buf[:n], self._buf[n:]
        self.offset += n
        return out

    def read_preamble(self) -> PacketFormat:
        head = b""
        while len(head) < PREAMBLE_SIZE:
            if not self._buf and not self._fill():
                break
            take = min(PREAMBLE_SIZE - len(head), len(self._buf))
            head, self._buf = head + self._buf[:take], self._buf[take:]
        self.offset = len(head)
        self.format, _ = parse_preamble(head)
        return self.format

    def _sync_packets(self) -> Iterator[Packet]:
        while True:
            head = self._take(MDI_SIZE, allow_eof=True)
            if head is None:
                return
            start = self.offset - MDI_SIZE
            if self.format is PacketFormat.SYNC_COARSE:
                count = self._take(COUNT_SIZE)
                n = int.from_bytes(count, "big")
                head += count
            else:
                n = 1
            body = self._take(n * (1 + OI_SIZE))
            try:
                packet, _ = decode_one(self.format, head + body)
            except FramingError as exc:
                raise FramingError(f"packet at byte offset {start}: {exc}") from None
            yield packet

    def _async_packets(self) -> Iterator[Packet]:
        deframer = Deframer(self.offset)
        first = True
        pending = self._buf
        self._buf = b""
        while True:
            for payload in deframer.push(pending):
                frame_start = self.offset
                if first and len(payload) == KEY_TAG_SIZE and payload[:1] == KEY_TAG:
                    self.fingerprint = payload[1:]
                else:
                    yield decode_payload(self.format, payload, frame_start)
                first = False
                self.offset = deframer.offset
            chunk = self.channel.read(READ_CHUNK)
            if not chunk:
                break
            pending = chunk
        if deframer.pending:
            raise FramingError("truncated packet: stream ended before end-of-packet marker",
                               deframer.offset + deframer.pending)

    def packets(self) -> Iterator[Packet]:
        if self.format is None:
            self.read_preamble()
        if self.format.is_sync:
            return self._sync_packets()
        return self._async_packets()


@dataclass
class ReceiveReport:
    format: PacketFormat | None = None
    symbols: int = 0
    packets: int = 0
    ipr: Ipr = field(default_factory=lambda: Ipr(0, 0, 0))
    fingerprint: bytes | None = None

    @property
    def ipr_ratio(self):
        return self.ipr.ratio if self.ipr.packet_bytes else None


def receive_records(channel: Channel, report: ReceiveReport | None = None) -> list[MangledSymbol]:
    """Read a whole stream and return its records, enforcing sync counters."""
    report = report if report is not None else ReceiveReport()
    reader = PacketReader(channel)
    report.format = reader.read_preamble()
    state = SyncState() if report.format.is_sync else None
    records: list[MangledSymbol] = []
    for packet in reader.packets():
        if state is not None:
            state.check(packet)
        report.packets += 1
        report.symbols += len(packet.records)
        report.ipr += packet_ipr(packet)
        records.extend(packet.records)
    report.fingerprint = reader.fingerprint
    return records


def receive(schedule: KeySchedule, channel: Channel, report: ReceiveReport | None = None) -> bytes:
    """Read a stream from ``channel`` and decrypt it back to the plaintext bytes."""
    records = receive_records(channel, report)
    return decrypt(records, schedule)
