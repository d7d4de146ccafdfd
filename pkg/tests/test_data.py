import json

import numpy as np
import pytest

from langseg.data import (
    DatasetManifest,
    DimensionMismatchAcrossFrames,
    DuplicatePhraseId,
    Instance,
    MissingFrame,
    ParseError,
    load_dataset,
    load_gt_masks,
    load_phrases,
    load_predictions,
    merge_instances,
    read_mask_image,
    video_catalog,
    write_mask_image,
    write_predictions,
)
from langseg.masks import random_mask


class TestLoadPhrases:
    def test_single_line(self, tmp_path):
        f = tmp_path / "phrases.txt"
        f.write_text('bike-packing 1 "a black bike"\n')
        instances = load_phrases(f, "first_frame")
        assert len(instances) == 1
        inst = instances[0]
        assert (inst.video_id, inst.object_id) == ("bike-packing", "1")
        assert inst.phrases["first_frame-0"].text == "a black bike"

    def test_empty_file(self, tmp_path):
        f = tmp_path / "phrases.txt"
        f.write_text("")
        assert load_phrases(f, "first_frame") == []

    def test_parse_error_carries_line_number(self, tmp_path):
        f = tmp_path / "phrases.txt"
        f.write_text('bike-packing 1 "ok"\nbroken line without quotes\n')
        with pytest.raises(ParseError) as err:
            load_phrases(f, "first_frame")
        assert err.value.line_no == 2

    def test_multiple_phrases_same_instance(self, tmp_path):
        f = tmp_path / "phrases.txt"
        f.write_text('v 1 "first"\nv 1 "second"\n')
        instances = load_phrases(f, "a2d")
        assert set(instances[0].phrases) == {"a2d-0", "a2d-1"}

    def test_sorted_output(self, tmp_path):
        f = tmp_path / "phrases.txt"
        f.write_text('zebra 1 "z"\napple 2 "a"\napple 1 "b"\n')
        instances = load_phrases(f, "a2d")
        assert [(i.video_id, i.object_id) for i in instances] == [
            ("apple", "1"),
            ("apple", "2"),
            ("zebra", "1"),
        ]

    def test_unknown_source_rejected(self, tmp_path):
        f = tmp_path / "phrases.txt"
        f.write_text('v 1 "x"\n')
        with pytest.raises(ValueError):
            load_phrases(f, "nonsense")


class TestMergeInstances:
    def test_two_sources_merge_onto_one_instance(self, tmp_path):
        first = tmp_path / "ff.txt"
        first.write_text('v 1 "seen in first frame"\n')
        full = tmp_path / "fv.txt"
        full.write_text('v 1 "seen in whole clip"\n')
        merged = merge_instances(
            load_phrases(first, "first_frame"), load_phrases(full, "full_video")
        )
        assert len(merged) == 1
        assert set(merged[0].phrases) == {"first_frame-0", "full_video-0"}

    def test_same_source_twice_collides(self, tmp_path):
        f = tmp_path / "ff.txt"
        f.write_text('v 1 "x"\n')
        a = load_phrases(f, "first_frame")
        b = load_phrases(f, "first_frame")
        with pytest.raises(DuplicatePhraseId):
            merge_instances(a, b)


def build_dataset(tmp_path, n_videos=2, n_frames=3, size=(16, 12), mask_format="binary"):
    """Synthetic on-disk dataset with frames, masks, and a phrase file."""
    rng = np.random.default_rng(42)
    frames_root = tmp_path / "frames"
    masks_root = tmp_path / "masks"
    phrase_lines = []
    classes = {}
    for v in range(n_videos):
        video = f"video{v}"
        for frame in range(n_frames):
            fid = f"{frame:05d}"
            img = (rng.random((*size, 3)) * 255).astype(np.uint8)
            from PIL import Image

            path = frames_root / video / f"{fid}.png"
            path.parent.mkdir(parents=True, exist_ok=True)
            Image.fromarray(img).save(path)
            mask = random_mask(rng, *size)
            if mask_format == "binary":
                write_mask_image(masks_root / video / "1" / f"{fid}.png", mask)
            else:
                from PIL import Image as PILImage

                arr = mask.astype(np.uint8)  # object id 1
                path = masks_root / video / f"{fid}.png"
                path.parent.mkdir(parents=True, exist_ok=True)
                PILImage.fromarray(arr, mode="L").save(path)
        phrase_lines.append(f'{video} 1 "the object in video {v}"')
        classes[f"{video}/1"] = "thing"
    (tmp_path / "phrases.txt").write_text("\n".join(phrase_lines) + "\n")
    (tmp_path / "classes.json").write_text(json.dumps(classes))
    manifest_doc = {
        "split": "test",
        "frames_root": "frames",
        "masks_root": "masks",
        "phrases": [{"path": "phrases.txt", "source": "first_frame"}],
        "classes": "classes.json",
        "mask_format": mask_format,
    }
    (tmp_path / "manifest.json").write_text(json.dumps(manifest_doc))
    return DatasetManifest.load(tmp_path / "manifest.json")


class TestManifestAndMasks:
    def test_load_dataset_populates_frames_and_classes(self, tmp_path):
        manifest = build_dataset(tmp_path)
        instances = load_dataset(manifest)
        assert [i.instance_id for i in instances] == ["video0/1", "video1/1"]
        assert instances[0].frames == ["00000", "00001", "00002"]
        assert instances[0].class_label == "thing"

    def test_missing_referenced_path(self, tmp_path):
        build_dataset(tmp_path)
        doc = json.loads((tmp_path / "manifest.json").read_text())
        doc["phrases"][0]["path"] = "absent.txt"
        (tmp_path / "manifest.json").write_text(json.dumps(doc))
        with pytest.raises(FileNotFoundError):
            DatasetManifest.load(tmp_path / "manifest.json")

    def test_all_zero_image_is_empty_mask(self, tmp_path):
        path = tmp_path / "m.png"
        write_mask_image(path, np.zeros((4, 4), dtype=bool))
        assert not read_mask_image(path).any()

    def test_missing_frame_raises(self, tmp_path):
        manifest = build_dataset(tmp_path)
        instances = load_dataset(manifest)
        (manifest.masks_root / "video0" / "1" / "00001.png").unlink()
        with pytest.raises(MissingFrame):
            load_gt_masks(manifest, instances[0])

    def test_indexed_extraction(self, tmp_path):
        from PIL import Image

        arr = np.zeros((6, 6), dtype=np.uint8)
        arr[:3, :3] = 1
        arr[3:, 3:] = 2
        path = tmp_path / "label.png"
        Image.fromarray(arr, mode="L").save(path)
        mask1 = read_mask_image(path, object_id="1")
        mask2 = read_mask_image(path, object_id="2")
        assert mask1.sum() == 9 and mask1[0, 0] and not mask1[5, 5]
        assert mask2.sum() == 9 and mask2[5, 5] and not mask2[0, 0]

    def test_indexed_dataset_round_trip(self, tmp_path):
        manifest = build_dataset(tmp_path, mask_format="indexed")
        instances = load_dataset(manifest)
        masks = load_gt_masks(manifest, instances[0])
        assert len(masks) == 3
        assert all(m.shape == (16, 12) for m in masks)

    def test_ragged_frames_flagged(self, tmp_path):
        manifest = build_dataset(tmp_path)
        instances = load_dataset(manifest)
        write_mask_image(
            manifest.masks_root / "video0" / "1" / "00002.png",
            np.ones((8, 8), dtype=bool),
        )
        with pytest.raises(DimensionMismatchAcrossFrames):
            load_gt_masks(manifest, instances[0])
        masks = load_gt_masks(manifest, instances[0], allow_ragged=True)
        assert masks[2].shape == (8, 8)

    def test_video_catalog(self, tmp_path):
        manifest = build_dataset(tmp_path)
        catalog = video_catalog(load_dataset(manifest))
        assert catalog == {"video0": {"1": "thing"}, "video1": {"1": "thing"}}


class TestPredictionsRoundTrip:
    def make_instance(self, n=3):
        return Instance(video_id="v", object_id="7", frames=[f"{k:05d}" for k in range(n)])

    def test_round_trip_identity(self, tmp_path):
        rng = np.random.default_rng(0)
        inst = self.make_instance()
        masks = [random_mask(rng, 10, 11) for _ in range(3)]
        write_predictions(tmp_path, inst, masks)
        loaded = load_predictions(tmp_path, inst)
        assert all(np.array_equal(a, b) for a, b in zip(masks, loaded))

    def test_empty_mask_counts(self, tmp_path):
        inst = self.make_instance(n=1)
        write_predictions(tmp_path, inst, [np.zeros((4, 5), dtype=bool)])
        doc = json.loads((tmp_path / "v" / "7.json").read_text())
        assert doc["frames"]["00000"]["counts"] == [20]

    def test_random_round_trips_bit_equal(self, tmp_path):
        rng = np.random.default_rng(1)
        for trial in range(20):
            inst = Instance(video_id="v", object_id=str(trial), frames=["00000"])
            mask = random_mask(rng, int(rng.integers(1, 15)), int(rng.integers(1, 15)))
            write_predictions(tmp_path, inst, [mask])
            assert np.array_equal(load_predictions(tmp_path, inst)[0], mask)

    def test_write_load_write_fixed_point(self, tmp_path):
        rng = np.random.default_rng(2)
        inst = self.make_instance()
        masks = [random_mask(rng, 9, 9) for _ in range(3)]
        path = write_predictions(tmp_path / "a", inst, masks)
        first = path.read_text()
        reloaded = load_predictions(tmp_path / "a", inst)
        second = write_predictions(tmp_path / "b", inst, reloaded).read_text()
        assert first == second
