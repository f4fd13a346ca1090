import random
import threading

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_schedule
from rgbcrypt.cipher import KeySchedule, encrypt
from rgbcrypt.codec import AxisTriple, Bpa, MangledSymbol, mangle
from rgbcrypt.errors import DesyncError, FramingError, PreambleError, TransportError
from rgbcrypt.framing import PREAMBLE_SIZE, PacketFormat, parse_packet
from rgbcrypt.transport import (
    FileChannel,
    Listener,
    MemoryChannel,
    ReceiveReport,
    connect,
    frame_records,
    light_decode,
    light_encode,
    parse_endpoint,
    receive,
    receive_records,
    send,
)
from rgbcrypt.points import KeyOp

F = PacketFormat
EXAMPLE_RECORDS = [
    MangledSymbol(0x26, 1, Bpa(3, 3, 3)),
    MangledSymbol(0xD5, 1, Bpa(3, 4, 3)),
    MangledSymbol(0x9C, 3, Bpa(3, 4, 4)),
]


class ChunkedChannel(MemoryChannel):
    """Reads come back in random small pieces."""

    def __init__(self, seed):
        super().__init__()
        self._rng = random.Random(seed)

    def read(self, n=65536):
        return super().read(min(n, self._rng.randint(1, 7)))


def collect(channel):
    return b"".join(iter(channel.read, b""))


def test_light_encode_example():
    sym = light_encode(EXAMPLE_RECORDS[1])
    assert sym.color == (3, 10, 5)
    assert sym.hex == "#030A05"
    assert light_encode(MangledSymbol(0, 0, Bpa(3, 3, 3))).color == (0, 0, 0)


def test_light_color_wraps_mod_256():
    rec = mangle(AxisTriple(260, 1, 511))
    assert light_encode(rec).color == (4, 1, 255)


def test_light_roundtrip(rng):
    for rec in EXAMPLE_RECORDS + [MangledSymbol(0, 0, Bpa(3, 3, 3))]:
        assert light_decode(light_encode(rec)) == rec
    for _ in range(1000):
        rec = mangle(AxisTriple(*(rng.randrange(2**12) for _ in range(3))))
        assert light_decode(light_encode(rec)) == rec


@pytest.mark.parametrize("fmt", list(F))
def test_example_over_memory(fmt, example_schedule):
    ch = MemoryChannel()
    report = send(b"A0/", example_schedule, fmt, ch)
    assert report.symbols == 3
    assert report.packets == (3 if fmt.is_fine else 1)
    assert [s.color for s in report.channel_symbols] == [(4, 4, 6), (3, 10, 5), (3, 9, 12)]
    assert receive(example_schedule, ch) == b"A0/"


def test_sync_fine_counters(example_schedule):
    ch = MemoryChannel()
    send(b"A0/", example_schedule, F.SYNC_FINE, ch)
    data = collect(ch)
    body = data[PREAMBLE_SIZE:]
    pkts = [parse_packet(F.SYNC_FINE, body[i : i + 14]) for i in range(0, len(body), 14)]
    assert [p.mdi.counter for p in pkts] == [0, 1, 2]
    assert [p.mdi.packet_number for p in pkts] == [0, 1, 2]
    assert [p.records[0] for p in pkts] == EXAMPLE_RECORDS


def test_sync_coarse_counter_counts_symbols():
    recs = EXAMPLE_RECORDS * 5
    pkts = frame_records(recs, F.SYNC_COARSE, batch=4)
    assert [p.mdi.counter for p in pkts] == [0, 4, 8, 12]
    assert [p.mdi.packet_number for p in pkts] == [0, 1, 2, 3]


def test_empty_message_sends_preamble_only(example_schedule):
    ch = MemoryChannel()
    report = send(b"", example_schedule, F.ASYNC_COARSE, ch)
    assert report.packets == 0
    data = collect(ch)
    assert len(data) == PREAMBLE_SIZE
    ch2 = MemoryChannel()
    send(b"", example_schedule, F.SYNC_FINE, ch2)
    assert receive(example_schedule, ch2) == b""


def test_async_coarse_single_packet(example_schedule):
    ch = MemoryChannel()
    report = send(b"A0/", example_schedule, F.ASYNC_COARSE, ch)
    assert report.packets == 1
    pkt = parse_packet(F.ASYNC_COARSE, collect(ch)[PREAMBLE_SIZE:])
    assert list(pkt.records) == EXAMPLE_RECORDS


def tamper(data, packet_index, new_counter):
    start = PREAMBLE_SIZE + 14 * packet_index
    return data[:start] + new_counter.to_bytes(4, "big") + data[start + 4 :]


def test_tampered_counter_is_desync(example_schedule):
    ch = MemoryChannel()
    send(b"A0/", example_schedule, F.SYNC_FINE, ch)
    data = tamper(collect(ch), 1, 7)
    bad = MemoryChannel()
    bad.write(data)
    bad.close()
    with pytest.raises(DesyncError) as exc:
        receive(example_schedule, bad)
    assert (exc.value.expected, exc.value.actual) == (1, 7)
    assert "expected 1, actual 7" in str(exc.value)


def test_tampered_packet_number_is_desync(example_schedule):
    ch = MemoryChannel()
    send(b"A0/", example_schedule, F.SYNC_FINE, ch)
    data = bytearray(collect(ch))
    data[PREAMBLE_SIZE + 14 + 7] = 9
    bad = MemoryChannel()
    bad.write(bytes(data))
    bad.close()
    with pytest.raises(DesyncError, match="packet number"):
        receive(example_schedule, bad)


def test_bad_preamble(example_schedule):
    ch = MemoryChannel()
    ch.write(b"NOPE\x01\x01\x08")
    ch.close()
    with pytest.raises(PreambleError, match="bad preamble"):
        receive(example_schedule, ch)


@pytest.mark.parametrize("fmt", list(F))
def test_truncated_stream(fmt, example_schedule):
    ch = MemoryChannel()
    send(b"A0/", example_schedule, fmt, ch)
    data = collect(ch)
    short = MemoryChannel()
    short.write(data[:-1])
    short.close()
    with pytest.raises(FramingError, match="truncated"):
        receive(example_schedule, short)


@settings(max_examples=40, deadline=None)
@given(st.binary(max_size=200), st.integers(0, 2**32), st.sampled_from(list(F)))
def test_any_chunking_roundtrip(msg, seed, fmt):
    sched = random_schedule(random.Random(seed))
    ch = ChunkedChannel(seed)
    send(msg, sched, fmt, ch, batch=17)
    assert receive(sched, ch) == msg


@pytest.mark.parametrize("fmt", list(F))
def test_concurrent_memory_roundtrip(fmt, rng):
    sched = random_schedule(rng)
    msg = bytes(rng.randrange(256) for _ in range(1024))
    ch = MemoryChannel()
    out = {}
    t = threading.Thread(target=lambda: out.setdefault("m", receive(sched, ch)))
    t.start()
    send(msg, sched, fmt, ch)
    t.join(10)
    assert out["m"] == msg


@pytest.mark.parametrize("fmt", list(F))
def test_file_roundtrip(fmt, rng, tmp_path):
    sched = random_schedule(rng)
    msg = bytes(rng.randrange(256) for _ in range(1024))
    path = tmp_path / "stream.bin"
    send(msg, sched, fmt, FileChannel(path, "w"))
    assert path.read_bytes()[:4] == b"C3DC"
    with FileChannel(path) as ch:
        assert receive(sched, ch) == msg


def net_roundtrip(msg, sched, fmt):
    with Listener("127.0.0.1", 0) as listener:
        out = {}

        def rx():
            ch = listener.accept(timeout=10)
            try:
                out["m"] = receive(sched, ch)
            finally:
                ch.close()

        t = threading.Thread(target=rx)
        t.start()
        send(msg, sched, fmt, connect("127.0.0.1", listener.port))
        t.join(10)
    return out["m"]


@pytest.mark.parametrize("fmt", list(F))
def test_network_roundtrip(fmt, rng):
    sched = random_schedule(rng)
    msg = bytes(rng.randrange(256) for _ in range(1024))
    assert net_roundtrip(msg, sched, fmt) == msg


def test_receive_report(example_schedule):
    ch = MemoryChannel()
    send(b"A0/", example_schedule, F.SYNC_FINE, ch)
    report = ReceiveReport()
    records = receive_records(ch, report)
    assert records == EXAMPLE_RECORDS
    assert (report.symbols, report.packets) == (3, 3)
    assert str(report.ipr_ratio) == "1/14"


def test_send_report_ipr(example_schedule):
    report = send(b"A0/", example_schedule, F.SYNC_FINE, MemoryChannel())
    assert str(report.ipr_ratio) == "1/14"
    assert str(report.wire_ipr_ratio) == "1/14"


def test_waf_beyond_wire_field_is_rejected():
    sched = KeySchedule.fixed([KeyOp.add(2**20, 0, 0)])
    with pytest.raises(FramingError, match="u16"):
        send(b"x", sched, F.ASYNC_FINE, MemoryChannel())
    assert encrypt(b"x", sched).records[0].waf > 0xFFFF


def test_endpoint_parsing():
    assert parse_endpoint("localhost:9000") == ("localhost", 9000)
    assert parse_endpoint(":9000") == ("127.0.0.1", 9000)
    with pytest.raises(TransportError):
        parse_endpoint("nope")


def test_connect_failure_reports_transport_error():
    with Listener() as listener:
        port = listener.port
    with pytest.raises(TransportError):
        connect("127.0.0.1", port, timeout=0.2)
