import json
import random

import pytest

from observatory.disambiguate import (
    BaselineTextProxy,
    apply_decision,
    block_id_for,
    build_blocks,
    detect_conflicts,
    load_state,
    merge_blockset,
    merge_group,
    persist_state,
    reconcile,
    render_issue,
    rescue,
    resolve_with_proxy,
)
from observatory.errors import (
    CorruptState,
    DuplicateKey,
    EmptyGroup,
    PartitionMismatch,
    ProxyFailure,
    UnknownBlock,
)

from conftest import make_instance


def _gromacs_corpus():
    shared = ["http://www.gromacs.org"]
    return [
        make_instance("gromacs", "cmd", "biotools", "gromacs/cmd", urls=shared),
        make_instance("gromacs", "lib", "biotools", "gromacs/lib", urls=shared),
        make_instance("gromacs", "suite", "biotools", "gromacs/suite", urls=shared),
        make_instance("gromacs_mpi", "cmd", "biotools", "gromacs_mpi/cmd"),
    ]


def _by_key(instances):
    return {i.key: i for i in instances}


class TestBuildBlocks:
    def test_gromacs_fixture_forms_two_blocks(self):
        blockset = build_blocks(_gromacs_corpus())
        memberships = sorted(
            tuple(sorted(k[0] for k in b.members)) for b in blockset.blocks.values()
        )
        assert memberships == [("gromacs", "gromacs", "gromacs"), ("gromacs_mpi",)]
        gromacs_block = next(
            b for b in blockset.blocks.values() if len(b.members) == 3
        )
        # webpage links carry no LINK edges and the types differ: 3 subclusters
        assert len(gromacs_block.subclusters) == 3

    def test_same_name_and_type_from_two_sources_is_one_subcluster(self):
        corpus = [
            make_instance("samtools", "cmd", "biotools"),
            make_instance("samtools", "cmd", "bioconda"),
        ]
        blockset = build_blocks(corpus)
        assert len(blockset.blocks) == 1
        block = next(iter(blockset.blocks.values()))
        assert len(block.subclusters) == 1
        assert block.status == "clean"

    def test_shared_repo_links_different_names(self):
        corpus = [
            make_instance("trim galore", "cmd", "toolshed",
                          urls=["https://github.com/F/TrimGalore"]),
            make_instance("trimgalore", "undefined", "github",
                          urls=["https://github.com/F/TrimGalore.git"]),
        ]
        blockset = build_blocks(corpus)
        block = next(iter(blockset.blocks.values()))
        assert len(block.members) == 2
        assert len(block.subclusters) == 1  # LINK joins both tiers
        assert block.status == "clean"

    def test_duplicate_keys_rejected(self):
        instance = make_instance("x", "cmd", "biotools", "same-id")
        clone = make_instance("x", "cmd", "biotools", "same-id")
        with pytest.raises(DuplicateKey):
            build_blocks([instance, clone])

    def test_result_independent_of_input_order(self):
        corpus = _gromacs_corpus() + [
            make_instance("anvio", "workflow", "toolshed", urls=["http://merenlab.org/software/anvio"]),
            make_instance("anvio", "cmd", "bioconda", urls=["https://merenlab.org/software/anvio/"]),
        ]
        forward = build_blocks(corpus)
        backward = build_blocks(list(reversed(corpus)))
        as_dict = lambda bs: {bid: b.to_dict() for bid, b in bs.blocks.items()}
        assert as_dict(forward) == as_dict(backward)


def brute_force_blocks(instances):
    """O(n^2) oracle: transitive closure of the documented pair predicate."""
    def linked(a, b):
        if a.canonical_name == b.canonical_name:
            return True
        repos_a = {u.normalized for u in a.repo_links()}
        repos_b = {u.normalized for u in b.repo_links()}
        return bool(repos_a & repos_b)

    keys = [i.key for i in instances]
    adjacency = {k: set() for k in keys}
    for i in range(len(instances)):
        for j in range(i + 1, len(instances)):
            if linked(instances[i], instances[j]):
                adjacency[keys[i]].add(keys[j])
                adjacency[keys[j]].add(keys[i])
    seen, components = set(), []
    for key in keys:
        if key in seen:
            continue
        stack, component = [key], set()
        while stack:
            current = stack.pop()
            if current in component:
                continue
            component.add(current)
            stack.extend(adjacency[current] - component)
        seen |= component
        components.append(frozenset(component))
    return frozenset(components)


def random_corpus(rng, size):
    names = [f"tool{n}" for n in range(30)]
    repos = [f"https://github.com/org/repo{n}" for n in range(20)]
    pages = [f"http://site{n}.example.org" for n in range(15)]
    types = ["cmd", "lib", "web", "workflow"]
    sources = ["biotools", "bioconda", "toolshed", "galaxy_eu"]
    corpus = []
    for n in range(size):
        urls = rng.sample(repos, rng.randint(0, 2)) + rng.sample(pages, rng.randint(0, 1))
        corpus.append(
            make_instance(
                rng.choice(names),
                rng.choice(types),
                rng.choice(sources),
                source_id=f"id{n}",
                urls=urls,
            )
        )
    return corpus


def test_blocks_match_brute_force_closure_on_random_corpora():
    rng = random.Random(20250809)
    for _ in range(25):
        corpus = random_corpus(rng, rng.randint(2, 60))
        expected = brute_force_blocks(corpus)
        got = frozenset(
            frozenset(b.members) for b in build_blocks(corpus).blocks.values()
        )
        assert got == expected


def test_subclusters_match_brute_force_nametype_link_closure():
    def linked(a, b):
        if (a.canonical_name, a.software_type) == (b.canonical_name, b.software_type):
            return True
        return bool(
            {u.normalized for u in a.repo_links()} & {u.normalized for u in b.repo_links()}
        )

    rng = random.Random(99)
    for _ in range(15):
        corpus = random_corpus(rng, rng.randint(2, 50))
        keys = [i.key for i in corpus]
        adjacency = {k: set() for k in keys}
        for i in range(len(corpus)):
            for j in range(i + 1, len(corpus)):
                if linked(corpus[i], corpus[j]):
                    adjacency[keys[i]].add(keys[j])
                    adjacency[keys[j]].add(keys[i])
        seen, expected = set(), set()
        for key in keys:
            if key in seen:
                continue
            stack, component = [key], set()
            while stack:
                current = stack.pop()
                if current in component:
                    continue
                component.add(current)
                stack.extend(adjacency[current] - component)
            seen |= component
            expected.add(frozenset(component))
        got = set()
        for block in build_blocks(corpus).blocks.values():
            for group in block.subclusters:
                got.add(frozenset(group))
        assert got == expected


class TestDetectConflicts:
    def test_gromacs_block_is_conflicted(self):
        blockset = build_blocks(_gromacs_corpus())
        conflicted = detect_conflicts(blockset)
        assert len(conflicted) == 1
        assert blockset.blocks[conflicted[0]].status == "conflict"

    def test_shared_repo_block_is_not_conflicted(self):
        corpus = [
            make_instance("a", "cmd", "biotools", urls=["https://github.com/x/y"]),
            make_instance("a", "web", "bioconda", urls=["https://github.com/x/y"]),
        ]
        blockset = build_blocks(corpus)
        assert detect_conflicts(blockset) == []

    def test_singleton_not_conflicted(self):
        blockset = build_blocks([make_instance("solo")])
        assert detect_conflicts(blockset) == []


class TestRescue:
    def test_gromacs_promoted_via_shared_webpage(self):
        corpus = _gromacs_corpus()
        blockset = build_blocks(corpus)
        conflicted = detect_conflicts(blockset)
        block = blockset.blocks[conflicted[0]]
        rescue(block, _by_key(corpus))
        assert block.status == "rescued"
        assert len(block.subclusters) == 1
        assert len(block.resolutions) == 1
        assert block.resolutions[0].method == "rescue"

    def test_anvio_merged_minimal_untouched(self):
        corpus = [
            make_instance("anvio", "workflow", "toolshed",
                          urls=["https://merenlab.org/software/anvio"]),
            make_instance("anvio", "cmd", "bioconda",
                          urls=["http://merenlab.org/software/anvio/"]),
            make_instance("anvio-minimal", "cmd", "bioconda"),
        ]
        blockset = build_blocks(corpus)
        assert len(blockset.blocks) == 2
        for block_id in detect_conflicts(blockset):
            rescue(blockset.blocks[block_id], _by_key(corpus))
        anvio_block = next(b for b in blockset.blocks.values() if len(b.members) == 2)
        minimal_block = next(b for b in blockset.blocks.values() if len(b.members) == 1)
        assert anvio_block.status == "rescued"
        assert minimal_block.status == "clean"

    def test_same_source_name_promotion_without_urls(self):
        corpus = [
            make_instance("x", "cmd", "biotools", "x1"),
            make_instance("x", "web", "biotools", "x2"),
        ]
        blockset = build_blocks(corpus)
        block = blockset.blocks[detect_conflicts(blockset)[0]]
        rescue(block, _by_key(corpus))
        assert block.status == "rescued"

    def test_name_only_different_source_not_promoted(self):
        corpus = [
            make_instance("x", "cmd", "biotools", description="alpha beta"),
            make_instance("x", "web", "bioconda", description="gamma delta"),
        ]
        blockset = build_blocks(corpus)
        block = blockset.blocks[detect_conflicts(blockset)[0]]
        rescue(block, _by_key(corpus))
        assert block.status == "conflict"
        assert len(block.subclusters) == 2
        assert block.resolutions == []


class TestProxy:
    def test_high_jaccard_merges(self):
        corpus = [
            make_instance("m", "cmd", "biotools",
                          description="alignment of short reads against large genomes"),
            make_instance("m", "web", "bioconda",
                          description="alignment of short reads against large genomes"),
        ]
        blockset = build_blocks(corpus)
        block = blockset.blocks[detect_conflicts(blockset)[0]]
        rescue(block, _by_key(corpus))
        resolve_with_proxy(block, _by_key(corpus), BaselineTextProxy())
        assert block.status == "proxy_resolved"
        assert len(block.subclusters) == 1
        assert block.resolutions[-1].method == "proxy"

    def test_low_jaccard_splits(self):
        corpus = [
            make_instance("m", "cmd", "biotools",
                          description="phylogenetic tree reconstruction toolkit"),
            make_instance("m", "web", "bioconda",
                          description="image segmentation neural network server"),
        ]
        blockset = build_blocks(corpus)
        block = blockset.blocks[detect_conflicts(blockset)[0]]
        resolve_with_proxy(block, _by_key(corpus), BaselineTextProxy())
        assert block.status == "proxy_resolved"
        assert len(block.subclusters) == 2

    def test_borderline_escalates(self):
        corpus = [
            make_instance("m", "cmd", "biotools",
                          description="fast spectral clustering toolkit for genomics data"),
            make_instance("m", "web", "bioconda",
                          description="fast clustering metrics dashboard for business analytics"),
        ]
        blockset = build_blocks(corpus)
        block = blockset.blocks[detect_conflicts(blockset)[0]]
        resolve_with_proxy(block, _by_key(corpus), BaselineTextProxy())
        assert block.status == "escalated"
        assert block.resolutions == []

    def test_proxy_failure_escalates_by_default(self):
        class FailingProxy:
            name = "failing"

            def compare(self, left, right):
                raise ProxyFailure("backend down")

        corpus = [
            make_instance("m", "cmd", "biotools", description="a"),
            make_instance("m", "web", "bioconda", description="b"),
        ]
        blockset = build_blocks(corpus)
        block = blockset.blocks[detect_conflicts(blockset)[0]]
        resolve_with_proxy(block, _by_key(corpus), FailingProxy())
        assert block.status == "escalated"

    def test_proxy_failure_can_leave_conflict(self):
        class FailingProxy:
            name = "failing"

            def compare(self, left, right):
                raise ProxyFailure("backend down")

        corpus = [
            make_instance("m", "cmd", "biotools", description="a"),
            make_instance("m", "web", "bioconda", description="b"),
        ]
        blockset = build_blocks(corpus)
        block = blockset.blocks[detect_conflicts(blockset)[0]]
        resolve_with_proxy(block, _by_key(corpus), FailingProxy(), failure_action="leave")
        assert block.status == "conflict"

    def test_thresholds_are_inclusive(self):
        proxy = BaselineTextProxy(tau_same=0.5, tau_diff=0.15)
        a = [make_instance("m", "cmd", "biotools", description="alpha beta")]
        b = [make_instance("m", "web", "bioconda", description="alpha gamma beta delta")]
        # tokens {alpha,beta} vs {alpha,gamma,beta,delta}: jaccard = 2/4 = 0.5
        assert proxy.compare(a, b).kind == "same"


class TestIssueDocuments:
    def _escalated_block(self):
        corpus = [
            make_instance("m", "cmd", "biotools",
                          description="fast spectral clustering toolkit for genomics data"),
            make_instance("m", "web", "bioconda",
                          description="fast clustering metrics dashboard for business analytics"),
            make_instance("m", "workbench", "toolshed"),  # no description at all
        ]
        blockset = build_blocks(corpus)
        block = blockset.blocks[detect_conflicts(blockset)[0]]
        resolve_with_proxy(block, _by_key(corpus), BaselineTextProxy())
        assert block.status == "escalated"
        return blockset, block, _by_key(corpus)

    def test_render_is_deterministic(self):
        _, block, instances = self._escalated_block()
        assert render_issue(block, instances) == render_issue(block, instances)

    def test_render_contains_partitions_and_placeholder(self):
        _, block, instances = self._escalated_block()
        document = render_issue(block, instances)
        assert f"block_id: {block.block_id}" in document
        assert "merge-all" in document
        assert "keep-split" in document
        assert "| — |" in document  # member without description

    def test_apply_decision_merges(self, tmp_path):
        blockset, block, _ = self._escalated_block()
        state_path = tmp_path / "blocks.json"
        decision = {
            "block_id": block.block_id,
            "partition": [[list(k) for k in block.members]],
            "decided_by": "alice",
            "rationale": "same upstream project",
        }
        apply_decision(blockset, decision, state_path=state_path)
        assert block.status == "human_resolved"
        assert len(block.resolutions) == 1
        assert block.resolutions[0].method == "human"
        assert state_path.exists()
        assert block.final_groups() == [sorted(block.members)]

    def test_apply_decision_split(self):
        blockset, block, _ = self._escalated_block()
        decision = {
            "block_id": block.block_id,
            "partition": [[list(k)] for k in block.members],
            "decided_by": "alice",
        }
        apply_decision(blockset, decision)
        assert len(block.final_groups()) == len(block.members)

    def test_apply_decision_partition_mismatch(self):
        blockset, block, _ = self._escalated_block()
        decision = {
            "block_id": block.block_id,
            "partition": [[list(block.members[0])]],  # omits one member
        }
        with pytest.raises(PartitionMismatch):
            apply_decision(blockset, decision)

    def test_apply_decision_unknown_block(self):
        blockset, _, _ = self._escalated_block()
        with pytest.raises(UnknownBlock):
            apply_decision(blockset, {"block_id": "nope", "partition": []})


class TestMergeGroup:
    def test_priority_source_wins_scalars(self):
        members = [
            make_instance("t", "cmd", "bioconda", description="from bioconda"),
            make_instance("t", "cmd", "biotools", description="from biotools"),
        ]
        merged = merge_group(members)
        assert merged.description == "from biotools"
        assert merged.sources == sorted(
            [("bioconda", members[0].source_id), ("biotools", members[1].source_id)]
        )
        assert "biotools" in merged.field_provenance["description"]

    def test_scalar_falls_through_when_priority_source_lacks_it(self):
        members = [
            make_instance("t", "cmd", "biotools"),
            make_instance("t", "cmd", "bioconda", description="only one"),
        ]
        assert merge_group(members).description == "only one"

    def test_single_member_identity(self):
        instance = make_instance(
            "solo", "cmd", "biotools", description="d", urls=["http://solo.org"]
        )
        merged = merge_group([instance])
        assert merged.canonical_name == "solo"
        assert merged.description == "d"
        assert [u.normalized for u in merged.urls] == ["solo.org"]
        assert merged.sources == [("biotools", instance.source_id)]

    def test_permutation_invariance(self):
        members = [
            make_instance("t", "cmd", "biotools", urls=["http://a.org"], description="x"),
            make_instance("t", "cmd", "bioconda", urls=["http://b.org"]),
            make_instance("t", "cmd", "toolshed", urls=["http://a.org/"]),
        ]
        first = json.dumps(merge_group(members).to_dict(), sort_keys=True)
        second = json.dumps(merge_group(list(reversed(members))).to_dict(), sort_keys=True)
        assert first == second

    def test_empty_group_raises(self):
        with pytest.raises(EmptyGroup):
            merge_group([])


def test_merged_tools_partition_instances_exactly():
    rng = random.Random(7)
    for _ in range(10):
        corpus = random_corpus(rng, rng.randint(2, 40))
        blockset = build_blocks(corpus)
        by_key = _by_key(corpus)
        for block_id in detect_conflicts(blockset):
            rescue(blockset.blocks[block_id], by_key)
        for block in blockset.blocks.values():
            if block.status == "conflict":
                resolve_with_proxy(block, by_key, BaselineTextProxy())
        tools = merge_blockset(blockset, by_key)
        covered = [tuple(s) for t in tools for s in t.sources]
        assert sorted(covered) == sorted((i.source.value, i.source_id) for i in corpus)
        assert len(set(t.tool_id for t in tools)) == len(tools)


class TestPersistence:
    def test_round_trip_is_byte_identical(self, tmp_path):
        corpus = _gromacs_corpus()
        blockset = build_blocks(corpus)
        detect_conflicts(blockset)
        for block in blockset.blocks.values():
            if block.status == "conflict":
                rescue(block, _by_key(corpus), decided_at="2025-01-01T00:00:00Z")
        path_a = tmp_path / "a.json"
        path_b = tmp_path / "b.json"
        persist_state(blockset, path_a)
        persist_state(load_state(path_a), path_b)
        assert path_a.read_bytes() == path_b.read_bytes()

    def test_unknown_schema_tag_is_corrupt(self, tmp_path):
        path = tmp_path / "blocks.json"
        path.write_text(json.dumps({"schema": "observatory-blocks/999", "blocks": []}))
        with pytest.raises(CorruptState):
            load_state(path)

    def test_invariant_violation_is_corrupt(self, tmp_path):
        corpus = [make_instance("solo")]
        blockset = build_blocks(corpus)
        path = tmp_path / "blocks.json"
        persist_state(blockset, path)
        doc = json.loads(path.read_text())
        doc["blocks"][0]["subclusters"] = []  # no longer partitions members
        path.write_text(json.dumps(doc))
        with pytest.raises(CorruptState):
            load_state(path)

    def test_rescue_appends_exactly_one_resolution(self, tmp_path):
        corpus = _gromacs_corpus()
        blockset = build_blocks(corpus)
        path = tmp_path / "blocks.json"
        persist_state(blockset, path)
        before = sum(len(b["resolutions"]) for b in json.loads(path.read_text())["blocks"])
        for block_id in detect_conflicts(blockset):
            rescue(blockset.blocks[block_id], _by_key(corpus))
        persist_state(blockset, path)
        after = sum(len(b["resolutions"]) for b in json.loads(path.read_text())["blocks"])
        assert after == before + 1

    def test_reconcile_adopts_resolutions_for_same_membership(self):
        corpus = _gromacs_corpus()
        blockset = build_blocks(corpus)
        for block_id in detect_conflicts(blockset):
            rescue(blockset.blocks[block_id], _by_key(corpus))
        rebuilt = reconcile(build_blocks(corpus), blockset)
        rescued = [b for b in rebuilt.blocks.values() if b.status == "rescued"]
        assert len(rescued) == 1
        assert len(rescued[0].resolutions) == 1


def test_block_ids_are_stable_content_hashes():
    corpus = _gromacs_corpus()
    ids_a = set(build_blocks(corpus).blocks)
    ids_b = set(build_blocks(list(reversed(corpus))).blocks)
    assert ids_a == ids_b
    keys = [i.key for i in corpus[:3]]
    assert block_id_for(keys) == block_id_for(list(reversed(keys)))


def test_conflict_rate_formula():
    corpus = _gromacs_corpus() + [make_instance("unique1"), make_instance("unique2")]
    blockset = build_blocks(corpus)
    detect_conflicts(blockset)
    # 4 blocks (gromacs, gromacs_mpi, unique1, unique2), one in conflict
    assert blockset.conflict_rate() == pytest.approx(1 / 4)
