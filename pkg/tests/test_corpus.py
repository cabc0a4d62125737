import numpy as np
import pytest

from bathyedit.corpus import (
    BAD,
    CorpusFormatError,
    Cruise,
    GOOD,
    GenSpec,
    Sounding,
    generate_corpus,
    load_corpus,
    region_stats,
    save_corpus,
    validate_corpus,
    zero_proxy_features,
)
from bathyedit.corpus.types import CorpusError


def make_cruise(cruise_id, region_id, labels, f=2):
    soundings = tuple(
        Sounding(
            cruise_id=cruise_id,
            seq=i,
            time=1000.0 + 5.0 * i,
            lat=1.0 + 0.001 * i,
            lon=2.0 + 0.001 * i,
            depth=3000.0 + i,
            features=tuple(float(i + j) for j in range(f)),
            label=lab,
        )
        for i, lab in enumerate(labels)
    )
    return Cruise(cruise_id=cruise_id, region_id=region_id, soundings=soundings)


def small_spec(**overrides):
    kwargs = dict(
        region_count=1,
        cruises_per_region=2,
        cruise_length=300,
        bad_fraction_per_region=(0.1,),
        mean_bad_run_length=10.0,
        noise_scale_per_region=(2.0,),
        seed=42,
    )
    kwargs.update(overrides)
    return GenSpec(**kwargs)


class TestFileRoundTrip:
    def test_two_cruises_of_three_rows(self, tmp_path):
        corpus = [
            make_cruise("a", "R0", [GOOD, BAD, GOOD]),
            make_cruise("b", "R0", [GOOD, GOOD, GOOD]),
        ]
        path = tmp_path / "c.txt"
        save_corpus(corpus, path)
        back = load_corpus(path)
        assert [(c.cruise_id, len(c)) for c in back] == [("a", 3), ("b", 3)]

    def test_round_trip_identity(self, tmp_path):
        spec = small_spec(region_count=2, cruises_per_region=5,
                          bad_fraction_per_region=(0.1, 0.3),
                          noise_scale_per_region=(2.0, 4.0))
        corpus = generate_corpus(spec)
        p1, p2 = tmp_path / "c1.txt", tmp_path / "c2.txt"
        save_corpus(corpus, p1)
        back = load_corpus(p1)
        assert back == corpus
        # byte-compare oracle on the serialized forms
        save_corpus(back, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_save_deterministic(self, tmp_path):
        corpus = generate_corpus(small_spec())
        p1, p2 = tmp_path / "a.txt", tmp_path / "b.txt"
        save_corpus(corpus, p1)
        save_corpus(corpus, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_empty_corpus_header_only(self, tmp_path):
        path = tmp_path / "empty.txt"
        save_corpus([], path)
        assert path.read_text() == "cruise_id,region_id,seq,time,lat,lon,depth,label\n"
        assert load_corpus(path) == []

    def test_rows_sorted_by_cruise_then_seq(self, tmp_path):
        corpus = [make_cruise("b", "R0", [GOOD]), make_cruise("a", "R0", [GOOD])]
        path = tmp_path / "c.txt"
        save_corpus(corpus, path)
        lines = path.read_text().splitlines()
        assert lines[1].startswith("a,") and lines[2].startswith("b,")


class TestLoadErrors:
    def write(self, tmp_path, rows):
        header = "cruise_id,region_id,seq,time,lat,lon,depth,f0,label"
        path = tmp_path / "bad.txt"
        path.write_text("\n".join([header, *rows]) + "\n")
        return path

    def test_duplicate_seq_names_line(self, tmp_path):
        path = self.write(
            tmp_path,
            ["a,R0,0,1.0,0.0,0.0,10.0,1.0,G", "a,R0,0,2.0,0.0,0.0,10.0,1.0,G"],
        )
        with pytest.raises(CorpusFormatError, match="line 3"):
            load_corpus(path)

    def test_seq_gap(self, tmp_path):
        path = self.write(
            tmp_path,
            ["a,R0,0,1.0,0.0,0.0,10.0,1.0,G", "a,R0,2,2.0,0.0,0.0,10.0,1.0,G"],
        )
        with pytest.raises(CorpusFormatError, match="gap"):
            load_corpus(path)

    def test_time_regression(self, tmp_path):
        path = self.write(
            tmp_path,
            ["a,R0,0,5.0,0.0,0.0,10.0,1.0,G", "a,R0,1,4.0,0.0,0.0,10.0,1.0,G"],
        )
        with pytest.raises(CorpusFormatError, match="time regresses"):
            load_corpus(path)

    def test_wrong_column_count(self, tmp_path):
        path = self.write(tmp_path, ["a,R0,0,1.0,0.0,0.0,10.0,G"])
        with pytest.raises(CorpusFormatError, match="line 2"):
            load_corpus(path)

    def test_unparseable_float(self, tmp_path):
        path = self.write(tmp_path, ["a,R0,0,xx,0.0,0.0,10.0,1.0,G"])
        with pytest.raises(CorpusFormatError, match="unparseable"):
            load_corpus(path)

    def test_unknown_label(self, tmp_path):
        path = self.write(tmp_path, ["a,R0,0,1.0,0.0,0.0,10.0,1.0,Q"])
        with pytest.raises(CorpusFormatError, match="label"):
            load_corpus(path)

    def test_non_contiguous_cruise(self, tmp_path):
        path = self.write(
            tmp_path,
            [
                "a,R0,0,1.0,0.0,0.0,10.0,1.0,G",
                "b,R0,0,1.0,0.0,0.0,10.0,1.0,G",
                "a,R0,1,2.0,0.0,0.0,10.0,1.0,G",
            ],
        )
        with pytest.raises(CorpusFormatError, match="contiguous"):
            load_corpus(path)

    def test_out_of_range_lat(self, tmp_path):
        path = self.write(tmp_path, ["a,R0,0,1.0,95.0,0.0,10.0,1.0,G"])
        with pytest.raises(CorpusFormatError, match="lat"):
            load_corpus(path)


class TestValidate:
    def test_cruise_id_mismatch(self):
        cruise = make_cruise("a", "R0", [GOOD])
        forged = Cruise(cruise_id="b", region_id="R0", soundings=cruise.soundings)
        with pytest.raises(CorpusError, match="carries"):
            validate_corpus([forged])

    def test_empty_cruise(self):
        with pytest.raises(CorpusError, match="empty"):
            validate_corpus([Cruise(cruise_id="a", region_id="R0", soundings=())])

    def test_negative_seq_rejected(self):
        with pytest.raises(CorpusError):
            Sounding("a", -1, 0.0, 0.0, 0.0, 1.0, (0.0,), GOOD)


class TestGenerator:
    def test_deterministic(self):
        spec = small_spec()
        assert generate_corpus(spec) == generate_corpus(spec)

    def test_bad_fraction_concentrates(self):
        # Monte Carlo count against the chain's stationary fraction
        spec = GenSpec(
            region_count=1,
            cruises_per_region=5,
            cruise_length=20000,
            bad_fraction_per_region=(0.13,),
            mean_bad_run_length=20.0,
            noise_scale_per_region=(2.0,),
            seed=13,
        )
        corpus = generate_corpus(spec)
        labels = [s.label for c in corpus for s in c.soundings]
        assert len(labels) == 100000
        frac = labels.count(BAD) / len(labels)
        assert 0.11 <= frac <= 0.15

    def test_mean_bad_run_length(self):
        spec = GenSpec(
            region_count=1,
            cruises_per_region=3,
            cruise_length=20000,
            bad_fraction_per_region=(0.25,),
            mean_bad_run_length=50.0,
            noise_scale_per_region=(2.0,),
            seed=7,
        )
        corpus = generate_corpus(spec)
        runs = []
        for cruise in corpus:
            length = 0
            for s in cruise.soundings:
                if s.label == BAD:
                    length += 1
                elif length:
                    runs.append(length)
                    length = 0
            if length:
                runs.append(length)
        assert len(runs) >= 200
        mean = sum(runs) / len(runs)
        assert 40.0 <= mean <= 60.0

    def test_runs_alternate(self):
        corpus = generate_corpus(small_spec(cruise_length=2000))
        for cruise in corpus:
            labels = [s.label for s in cruise.soundings]
            # no zero-length runs is implied by alternation of raw labels
            assert set(labels) <= {GOOD, BAD}

    def test_all_good_region(self):
        spec = small_spec(bad_fraction_per_region=(0.0,))
        corpus = generate_corpus(spec)
        assert all(s.label == GOOD for c in corpus for s in c.soundings)

    def test_all_bad_region(self):
        spec = small_spec(bad_fraction_per_region=(1.0,))
        corpus = generate_corpus(spec)
        assert all(s.label == BAD for c in corpus for s in c.soundings)

    def test_invariants_hold(self):
        corpus = generate_corpus(small_spec(region_count=3,
                                            bad_fraction_per_region=(0.1, 0.2, 0.0),
                                            noise_scale_per_region=(1.0, 2.0, 3.0)))
        validate_corpus(corpus)

    def test_zero_proxy_features(self):
        corpus = generate_corpus(small_spec(cruise_length=50))
        ablated = zero_proxy_features(corpus)
        for c0, c1 in zip(corpus, ablated):
            for s0, s1 in zip(c0.soundings, c1.soundings):
                assert s1.features[3:] == (0.0, 0.0, 0.0)
                assert s1.features[:3] == s0.features[:3]
                assert s1.label == s0.label

    def test_genspec_validation(self):
        with pytest.raises(CorpusError):
            small_spec(bad_fraction_per_region=(0.1, 0.2))
        with pytest.raises(CorpusError):
            small_spec(mean_bad_run_length=0.0)
        with pytest.raises(CorpusError):
            small_spec(bad_fraction_per_region=(1.5,))


class TestRegionStats:
    def test_all_good(self):
        corpus = [make_cruise("a", "R0", [GOOD] * 4), make_cruise("b", "R1", [GOOD])]
        stats = region_stats(corpus)
        assert [r.bad_fraction for r in stats] == [0.0, 0.0]

    def test_one_bad_of_eight(self):
        corpus = [make_cruise("a", "R0", [BAD] + [GOOD] * 7)]
        (region,) = region_stats(corpus)
        assert region.bad_fraction == 0.125
        assert region.cruise_ids == frozenset({"a"})

    def test_matches_direct_count(self):
        spec = small_spec(region_count=2, cruises_per_region=3,
                          bad_fraction_per_region=(0.2, 0.05),
                          noise_scale_per_region=(2.0, 2.0))
        corpus = generate_corpus(spec)
        stats = region_stats(corpus)
        total_bad = sum(1 for c in corpus for s in c.soundings if s.label == BAD)
        per_region_bad = 0
        for region in stats:
            n = sum(len(c) for c in corpus if c.region_id == region.region_id)
            bad = sum(
                1
                for c in corpus
                if c.region_id == region.region_id
                for s in c.soundings
                if s.label == BAD
            )
            per_region_bad += bad
            assert abs(region.bad_fraction - bad / n) < 1e-12
        assert per_region_bad == total_bad


def test_features_are_informative_and_proxies_positional():
    spec = small_spec(cruise_length=5000, bad_fraction_per_region=(0.2,),
                      mean_bad_run_length=30.0)
    corpus = generate_corpus(spec)
    X = np.array([s.features for c in corpus for s in c.soundings])
    y = np.array([s.label == BAD for c in corpus for s in c.soundings])
    # residual channel separates labels on average for the spike mode
    assert X[y, 0].mean() > X[~y, 0].mean() + 10.0
    # proxies simply echo position
    s0 = corpus[0].soundings[123]
    assert s0.features[4] == s0.lat and s0.features[5] == s0.lon
    assert s0.features[3] == pytest.approx(s0.time % 86400.0)
