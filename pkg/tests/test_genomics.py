import dataclasses

import numpy as np
import pytest

from conftest import identical_columns
from ubva.errors import (
    AllMissingError,
    DuplicateSnpIdError,
    EmptyPanelError,
    InputError,
    KTooLargeError,
    ParseError,
    UnsortedPositionsWarning,
)
from ubva.formats import write_matrix_binary
from ubva.genomics import (
    GenotypePanel,
    chromosome_measures,
    compute_maf,
    export_manhattan,
    filter_snps,
    panel_pcs,
    parse_panel,
    pc_scores,
    read_manhattan,
    simulate_block_panel,
    write_metadata,
    write_panel_tsv,
)
from ubva.matrix import standardize, thin_svd
from ubva.severity import measure


def _write(tmp_path, geno, meta, name="g"):
    gp, mp = tmp_path / f"{name}.tsv", tmp_path / f"{name}.meta.tsv"
    gp.write_text(geno)
    mp.write_text(meta)
    return gp, mp


def _panel(g, chrom=None, pos=None):
    g = np.asarray(g, dtype=float)
    n, p = g.shape
    return GenotypePanel(
        genotypes=g,
        snp_ids=[f"s{j}" for j in range(p)],
        chromosomes=chrom or ["1"] * p,
        positions=np.arange(1, p + 1) * 10 if pos is None else np.asarray(pos),
        sample_ids=[f"i{i}" for i in range(n)],
    )


class TestParse:
    def test_small(self, tmp_path):
        gp, mp = _write(
            tmp_path,
            "#samples 3\nsample_id\trs1\trs2\nA\t0\t1\nB\t2\t1\nC\t1\t0\n",
            "snp_id\tchr\tpos\nrs1\t1\t100\nrs2\t1\t200\n",
        )
        panel = parse_panel(gp, mp)
        assert (panel.n, panel.p, panel.n_missing) == (3, 2, 0)
        np.testing.assert_array_equal(panel.genotypes, [[0, 1], [2, 1], [1, 0]])
        assert panel.sample_ids == ["A", "B", "C"]

    def test_snp_major_and_missing(self, tmp_path):
        gp, mp = _write(
            tmp_path,
            "#samples 3\n#layout snp-major\n#population AFR\nsnp_id\tA\tB\tC\nrs1\t0\tNA\t2\nrs2\t.\t1\t1\n",
            "snp_id\tchr\tpos\nrs1\t1\t100\nrs2\t1\t200\n",
        )
        panel = parse_panel(gp, mp)
        assert panel.population == "AFR"
        assert panel.n_missing == 2
        assert np.isnan(panel.genotypes[1, 0]) and panel.genotypes[2, 0] == 2

    def test_bad_token(self, tmp_path):
        gp, mp = _write(
            tmp_path,
            "#samples 2\nsample_id\trs1\trs2\nA\t0\t3\nB\t2\t1\n",
            "snp_id\tchr\tpos\nrs1\t1\t100\nrs2\t1\t200\n",
        )
        with pytest.raises(ParseError, match="'3'") as info:
            parse_panel(gp, mp)
        assert info.value.line == 3

    def test_shuffled_positions(self, tmp_path):
        rng = np.random.default_rng(8)
        g = rng.integers(0, 3, size=(6, 8)).astype(float)
        chrom = ["2", "1", "10", "1", "2", "1", "10", "2"]
        pos = [50, 300, 7, 20, 10, 100, 3, 30]
        src = _panel(g, chrom, pos)
        write_panel_tsv(src, tmp_path / "g.tsv")
        write_metadata(src, tmp_path / "m.tsv")
        with pytest.warns(UnsortedPositionsWarning):
            panel = parse_panel(tmp_path / "g.tsv", tmp_path / "m.tsv")
        assert panel.warnings
        assert panel.chromosomes == ["1", "1", "1", "2", "2", "2", "10", "10"]
        assert list(panel.positions) == [20, 100, 300, 10, 30, 50, 3, 7]
        for j, sid in enumerate(panel.snp_ids):
            np.testing.assert_array_equal(panel.genotypes[:, j], g[:, src.snp_ids.index(sid)])
        panel.validate()

    def test_duplicate_id(self, tmp_path):
        gp, mp = _write(
            tmp_path,
            "#samples 3\nsample_id\trs1\trs1\nA\t0\t1\nB\t2\t1\nC\t1\t0\n",
            "snp_id\tchr\tpos\nrs1\t1\t100\n",
        )
        with pytest.raises(DuplicateSnpIdError):
            parse_panel(gp, mp)

    def test_binary(self, tmp_path):
        g = np.array([[0, 1, 2], [1, np.nan, 0], [2, 2, 1], [0, 1, 1]])
        write_matrix_binary(tmp_path / "g.bin", g)
        (tmp_path / "m.tsv").write_text("snp_id\tchr\tpos\na\t1\t1\nb\t1\t2\nc\t1\t3\n")
        panel = parse_panel(tmp_path / "g.bin", tmp_path / "m.tsv", "binary")
        np.testing.assert_array_equal(panel.genotypes, g)
        g[0, 0] = 0.5
        write_matrix_binary(tmp_path / "g.bin", g)
        with pytest.raises(ParseError):
            parse_panel(tmp_path / "g.bin", tmp_path / "m.tsv", "binary")

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError):
            parse_panel(tmp_path / "nope.tsv", tmp_path / "nope.meta")


class TestMaf:
    def test_examples(self):
        g = np.array([[0, 1, 0], [0, 1, 1], [0, 1, 2], [0, 1, np.nan]])
        np.testing.assert_array_equal(compute_maf(_panel(g)), [0, 0.5, 0.5])

    def test_all_missing(self):
        with pytest.raises(AllMissingError):
            compute_maf(_panel([[0, np.nan], [1, np.nan], [2, np.nan]]))


class TestFilter:
    def test_monomorphic(self):
        out = filter_snps(_panel([[0, 1], [0, 2], [0, 0]]))
        assert out.snp_ids == ["s1"]

    def test_missing_default(self):
        out = filter_snps(_panel([[0, 1], [1, np.nan], [2, 0]]))
        assert out.snp_ids == ["s0"]

    def test_maf_table(self):
        # 50 samples carry 100 alleles; column j has alt-allele count ALT[j]
        alt = [0, 1, 2, 99, 100, 50, 3, 98, 1, 0]
        g = np.zeros((50, 10))
        for j, a in enumerate(alt):
            g[: a // 2, j] = 2
            if a % 2:
                g[a // 2, j] = 1
        maf = np.minimum(np.array(alt) / 100, 1 - np.array(alt) / 100)
        np.testing.assert_allclose(compute_maf(_panel(g)), maf, rtol=1e-15)
        out = filter_snps(_panel(g), maf_min=0.01)
        # MAF 0.01 sits on the boundary and is kept; 0 is dropped
        assert out.snp_ids == ["s1", "s2", "s3", "s5", "s6", "s7", "s8"]
        out = filter_snps(_panel(g), maf_min=0.02)
        assert out.snp_ids == ["s2", "s5", "s6", "s7"]
        log = {e["snp_id"]: e["reason"] for e in out.filter_log}
        assert log["s0"] == "maf" and log["s2"] == ""

    def test_hwe(self):
        p = _panel([[0, 1, 2], [1, 2, 0], [2, 0, 1]])
        p.hwe_pass = np.array([True, False, True])
        assert filter_snps(p).snp_ids == ["s0", "s2"]
        assert filter_snps(p, require_hwe=False).p == 3

    def test_empty(self):
        with pytest.raises(EmptyPanelError, match="EmptyPanel"):
            filter_snps(_panel([[0, 0], [0, 0], [0, 0]]))


class TestChromosomeMeasures:
    def test_planted_block(self):
        panel, block = simulate_block_panel(200, 300, 20, 0.9, seed=1)
        rep = chromosome_measures(filter_snps(panel))[0]
        top = np.argsort(rep.severity.sR)[::-1][:20]
        assert sorted(top) == list(block)
        assert rep.severity.flagged[block].all()
        peak = rep.top_peak()
        assert peak.start <= block[0] and peak.end >= block[-1]

    def test_identical_chromosomes(self):
        g = np.random.default_rng(3).integers(0, 3, size=(30, 12)).astype(float)
        panel = _panel(np.hstack([g, g]), ["1"] * 12 + ["2"] * 12, list(range(1, 13)) * 2)
        a, b = chromosome_measures(panel)
        assert a.summary == b.summary
        np.testing.assert_array_equal(a.severity.sR, b.severity.sR)
        assert [pk.start for pk in a.peaks] == [pk.start for pk in b.peaks]

    def test_single_chromosome_partition(self):
        g = np.random.default_rng(4).integers(0, 3, size=(25, 15)).astype(float)
        rep = chromosome_measures(_panel(g))[0]
        whole = measure(g)
        np.testing.assert_array_equal(rep.severity.sR, whole.severity.sR)
        assert rep.summary == whole.summary

    def test_threads_same(self):
        g = np.random.default_rng(5).integers(0, 3, size=(20, 30)).astype(float)
        panel = _panel(g, ["1"] * 10 + ["2"] * 10 + ["X"] * 10, list(range(1, 11)) * 3)
        one = chromosome_measures(panel, threads=1)
        many = chromosome_measures(panel, threads=3)
        assert [r.chromosome for r in many] == ["1", "2", "X"]
        for a, b in zip(one, many):
            assert a.severity.sR.tobytes() == b.severity.sR.tobytes()

    def test_missing_needs_impute(self):
        g = np.random.default_rng(6).integers(0, 3, size=(10, 4)).astype(float)
        g[0, 0] = np.nan
        with pytest.raises(InputError):
            chromosome_measures(_panel(g))
        assert chromosome_measures(_panel(g), impute="mean")[0].severity.sR.shape == (4,)


class TestPcs:
    def test_identical_columns(self):
        raw = identical_columns(6, 3)
        svd = thin_svd(standardize(raw))
        s = pc_scores(svd, 1)[:, 0]
        col = standardize(raw).values[:, 0]
        assert abs(np.corrcoef(s, col)[0, 1]) == pytest.approx(1, abs=1e-12)

    def test_norm(self, rng):
        svd = thin_svd(standardize(rng.standard_normal((15, 6))))
        s = pc_scores(svd, 2)
        np.testing.assert_allclose((s**2).sum(axis=0), svd.d[:2] ** 2, rtol=1e-8)
        with pytest.raises(KTooLargeError):
            pc_scores(svd, 7)

    def test_clusters(self):
        rng = np.random.default_rng(10)
        shift = np.zeros(40)
        shift[:20] = 1.5
        a = rng.standard_normal((30, 40))
        b = rng.standard_normal((30, 40)) + shift
        svd = thin_svd(standardize(np.vstack([a, b])))
        pc1 = pc_scores(svd, 1)[:, 0]
        lo, hi = sorted([pc1[:30], pc1[30:]], key=np.mean)
        assert lo.max() < hi.min()

    def test_sign_convention(self):
        g = np.random.default_rng(2).integers(0, 3, size=(20, 10)).astype(float)
        scores = panel_pcs(_panel(g), 2)
        piv = np.argmax(np.abs(scores), axis=0)
        assert np.all(scores[piv, [0, 1]] > 0)


class TestManhattan:
    def test_rows_and_roundtrip(self, tmp_path):
        g = np.random.default_rng(7).integers(0, 3, size=(12, 3)).astype(float)
        reps = chromosome_measures(_panel(g))
        export_manhattan(reps, tmp_path / "m.tsv")
        lines = (tmp_path / "m.tsv").read_text().splitlines()
        assert len(lines) == 4
        rows = read_manhattan(tmp_path / "m.tsv")
        assert [r[1] for r in rows] == [10, 20, 30]
        assert [r[3] for r in rows] == list(reps[0].severity.sR)

    def test_empty(self, tmp_path):
        with pytest.raises(InputError):
            export_manhattan([], tmp_path / "m.tsv")
        assert not (tmp_path / "m.tsv").exists()


def test_panel_subset_keeps_metadata():
    p = _panel(np.random.default_rng(0).integers(0, 3, size=(5, 4)).astype(float))
    sub = p.subset([0, 2])
    assert sub.snp_ids == ["s0", "s2"] and list(sub.positions) == [10, 30]
    assert dataclasses.replace(sub).p == 2
