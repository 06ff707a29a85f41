from datetime import date

import pytest
from hypothesis import given, strategies as st

from stationrank import ingest
from stationrank.errors import EmptyInput, MissingColumns

from conftest import DAY, make_trip

CANONICAL_HEADER = "trip_id,operation_day,seq,station_id,station_name,arrival,departure,mode,passthrough\n"


def canonical(rows):
    return (CANONICAL_HEADER + "\n".join(rows)).encode()


def test_minimal_two_stop_trip():
    data = canonical(
        [
            "T1,2019-10-01,0,A,Alpha,,2019-10-01T10:00,train,false",
            "T1,2019-10-01,1,B,Beta,2019-10-01T10:04,,train,false",
        ]
    )
    trips, warnings = ingest.parse_actual_data(data, format="canonical_csv")
    assert len(trips) == 1
    assert len(trips[0].stops) == 2
    assert not warnings


def test_departure_before_arrival_drops_trip_with_warning():
    data = canonical(
        [
            "T1,2019-10-01,0,A,Alpha,2019-10-01T10:05,2019-10-01T10:00,train,false",
            "T1,2019-10-01,1,B,Beta,2019-10-01T10:10,,train,false",
        ]
    )
    trips, warnings = ingest.parse_actual_data(data, format="canonical_csv")
    assert trips == []
    assert any("excluded" in str(w) for w in warnings)


def test_sbb_mode_filter_keeps_only_trains():
    header = "BETRIEBSTAG;FAHRT_BEZEICHNER;PRODUKT_ID;BPUIC;HALTESTELLEN_NAME;ANKUNFTSZEIT;AN_PROGNOSE;ABFAHRTSZEIT;AB_PROGNOSE;DURCHFAHRT_TF\n"
    rows = [
        "01.10.2019;train1;Zug;8500001;Alpha;;;01.10.2019 10:00;01.10.2019 10:00:12;false",
        "01.10.2019;train1;Zug;8500002;Beta;01.10.2019 10:04;01.10.2019 10:05:30;;;false",
        "01.10.2019;bus1;Bus;8500001;Alpha;;;01.10.2019 10:00;;false",
        "01.10.2019;bus1;Bus;8500002;Beta;01.10.2019 10:04;;;;false",
    ]
    trips, _ = ingest.parse_actual_data(
        (header + "\n".join(rows)).encode(), format="sbb_ist_daten_csv"
    )
    assert len(trips) == 1
    assert trips[0].trip_id == "train1"
    # actual times preferred over scheduled, truncated to the minute
    assert trips[0].stops[1].arrival.minute == 5
    assert trips[0].stops[1].arrival.second == 0


def test_sbb_operation_day_not_calendar_day():
    header = "BETRIEBSTAG;FAHRT_BEZEICHNER;PRODUKT_ID;BPUIC;HALTESTELLEN_NAME;ANKUNFTSZEIT;AN_PROGNOSE;ABFAHRTSZEIT;AB_PROGNOSE;DURCHFAHRT_TF\n"
    rows = [
        "01.10.2019;night;Zug;1;A;;;01.10.2019 23:55;;false",
        "01.10.2019;night;Zug;2;B;02.10.2019 00:10;;;;false",
    ]
    trips, _ = ingest.parse_actual_data(
        (header + "\n".join(rows)).encode(), format="sbb_ist_daten_csv"
    )
    assert trips[0].operation_day == date(2019, 10, 1)


def test_missing_columns():
    with pytest.raises(MissingColumns):
        ingest.parse_actual_data(b"trip_id,operation_day\nT1,2019-10-01\n")


def test_empty_input():
    with pytest.raises(EmptyInput):
        ingest.parse_actual_data(canonical([]))


def test_station_directory_roundtrip_and_dedup():
    data = b"station_id,name,lat,lon\nA,Alpha,47.1,8.1\nB,Beta,47.2,8.2\nC,Gamma,47.3,8.3\n"
    directory, warnings = ingest.load_station_directory(data)
    assert len(directory) == 3
    assert not warnings
    assert directory.name("B") == "Beta"
    assert directory.coords("C") == (47.3, 8.3)

    dup = b"station_id,name,lat,lon\nA,First,47.1,8.1\nA,Second,47.9,8.9\n"
    directory, warnings = ingest.load_station_directory(dup)
    assert len(directory) == 1
    assert directory.name("A") == "First"
    assert len(warnings) == 1


def test_station_directory_missing_lon_column():
    with pytest.raises(MissingColumns):
        ingest.load_station_directory(b"station_id,name,lat\nA,Alpha,47.1\n")


def test_group_by_operation_day():
    d2 = date(2019, 10, 2)
    trips = [
        make_trip("a", [("A", None, "10:00"), ("B", "10:05", None)]),
        make_trip("b", [("A", None, "11:00"), ("B", "11:05", None)]),
        make_trip("c", [("A", None, "10:00"), ("B", "10:05", None)], day=d2),
    ]
    grouped = ingest.group_by_operation_day(trips)
    assert {d: len(v) for d, v in grouped.items()} == {DAY: 2, d2: 1}
    assert ingest.group_by_operation_day([]) == {}


def test_post_midnight_trip_stays_with_operation_day():
    trip = make_trip("night", [("A", None, "23:55"), ("B", "23:59", None)])
    grouped = ingest.group_by_operation_day([trip])
    assert list(grouped) == [DAY]


def test_canonical_roundtrip():
    trips = [
        make_trip("T1", [("A", None, "10:00"), ("M", "10:02", "10:02", True), ("B", "10:04", None)]),
        make_trip("T2", [("A", "09:00", "09:01"), ("C", "09:10", "09:12"), ("B", "09:20", None)]),
    ]
    csv_text = ingest.trips_to_canonical_csv(trips)
    reparsed, warnings = ingest.parse_actual_data(csv_text.encode(), format="canonical_csv")
    assert not warnings
    assert reparsed == sorted(trips, key=lambda t: t.trip_id)


@given(
    st.lists(
        st.tuples(st.integers(0, 1200), st.integers(0, 10)),
        min_size=2,
        max_size=8,
    )
)
def test_parsed_trips_have_monotone_stop_times(offsets):
    # build a synthetic canonical file with cumulative times; always monotone
    minute = 0
    rows = []
    for seq, (gap, dwell) in enumerate(offsets):
        minute += gap % 60
        arr = f"2019-10-01T{minute // 60 % 24:02d}:{minute % 60:02d}"
        minute += dwell
        dep = f"2019-10-01T{minute // 60 % 24:02d}:{minute % 60:02d}"
        if minute >= 24 * 60:
            return  # keep the fixture within one calendar day
        rows.append(f"T,2019-10-01,{seq},S{seq},S{seq},{arr},{dep},train,false")
    trips, _ = ingest.parse_actual_data(canonical(rows))
    for trip in trips:
        times = [t for s in trip.stops for t in (s.arrival, s.departure) if t]
        assert times == sorted(times)
