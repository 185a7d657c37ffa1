"""Train / detect / evaluate orchestration over a corpus directory.

A corpus pairs `caseNN.pgm` (or .png) with either two expert annotation
files `caseNN.a.lmk` + `caseNN.b.lmk` (averaged into the baseline) or a
single `caseNN.lmk`. Training learns the search-region model and the
weighted templates from the train half of a deterministic split;
detection runs the three mechanisms per case with per-case error
isolation; evaluation scores detections against the expert baseline.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from . import chin as chin_mod
from .config import PipelineConfig
from .dataset import (
    GrayImage,
    LandmarkSet,
    Point,
    average_expert_sets,
    load_annotations,
    load_image,
    read_case_header,
    save_annotations,
    split_corpus,
)
from .errors import HaldError, MissingLandmark, NoMatchingCases
from .evaluation import (
    MECHANISM_OF,
    DetectionResult,
    EvaluationReport,
    build_report,
    emit_report,
    line_error_deg,
    point_error_mm,
)
from .imaging import Region
from .landmarks import (
    AUX_TEMPLATE_MATCHED,
    DETECTED_POINTS,
    EDGE_FITTED_LINES,
    LANDMARK_NAMES,
    LINE_ENDPOINTS,
    LINE_ENDPOINTS_INDEPENDENT,
    LINE_NAMES,
    LINE_REGION_KEYS,
    REPORT_ITEM_ORDER,
    TEMPLATE_MATCHED,
)
from .lines import (
    DegreeThresholds,
    EdgeLineParams,
    Line2D,
    RansacParams,
    default_degree_thresholds,
    estimate_edge_line,
    frankfort_candidates,
    frankfort_line,
    load_degree_thresholds,
    save_degree_thresholds,
    thresholds_from_lengths,
)
from .overlay import (
    DETECTED_COLOR,
    EXPERT_COLOR,
    draw_circle,
    draw_cross,
    draw_line,
    save_ppm,
    to_rgb,
)
from .regions import (
    RegionModel,
    learn_regions,
    load_region_model,
    region_for,
    save_region_model,
)
from .templates import (
    WeightedTemplate,
    build_template,
    load_template,
    load_weight_map,
    match,
    save_template,
)

_IMAGE_SUFFIXES = (".pgm", ".png")


@dataclass(frozen=True)
class CaseRecord:
    case_id: str
    image_path: Path
    expert_paths: tuple[Path, ...]  # one or two .lmk files


def discover_corpus(directory) -> list[CaseRecord]:
    directory = Path(directory)
    records = []
    for image_path in sorted(directory.iterdir()):
        if image_path.suffix.lower() not in _IMAGE_SUFFIXES:
            continue
        stem = image_path.with_suffix("")
        pair = (Path(f"{stem}.a.lmk"), Path(f"{stem}.b.lmk"))
        single = Path(f"{stem}.lmk")
        if pair[0].exists() and pair[1].exists():
            expert = pair
        elif single.exists():
            expert = (single,)
        else:
            continue
        records.append(CaseRecord(image_path.stem, image_path, expert))
    return records


def load_baseline(record: CaseRecord) -> tuple[LandmarkSet, float]:
    """Expert baseline: the mean of two expert sets, or the single set."""
    first, mm = load_annotations(record.expert_paths[0])
    if len(record.expert_paths) == 1:
        return first, mm
    second, _ = load_annotations(record.expert_paths[1])
    return average_expert_sets(first, second), mm


def case_facing(record: CaseRecord, config: PipelineConfig) -> chin_mod.Facing:
    header = read_case_header(record.expert_paths[0])
    return chin_mod.Facing(header.facing or config["facing"])


# --- training -----------------------------------------------------------------


def _template_crop(img: GrayImage, point: Point, region: Region,
                   max_size: int, enhance: tuple[int, float]):
    from .imaging import crop, enhance_clamped

    w = min(region.width, max_size)
    h = min(region.height, max_size)
    x0 = min(max(int(round(point[0])) - w // 2, 0), img.width - w)
    y0 = min(max(int(round(point[1])) - h // 2, 0), img.height - h)
    part = crop(img, Region(x0, y0, w, h))
    raster = enhance_clamped(part.image, enhance[0], enhance[1])
    return raster, (point[0] - part.region.x0, point[1] - part.region.y0)


def train(config: PipelineConfig, corpus_dir=None, model_dir=None) -> str:
    """Learn regions, templates and degree thresholds; persist the model."""
    corpus_dir = Path(corpus_dir or config["paths.corpus_dir"])
    model_dir = Path(model_dir or config["paths.model_dir"])
    records = discover_corpus(corpus_dir)
    if len(records) < 2:
        raise NoMatchingCases(f"corpus {corpus_dir} holds {len(records)} usable cases")

    split = split_corpus([r.case_id for r in records], config["split.seed"])
    by_id = {r.case_id: r for r in records}

    train_images: dict[str, GrayImage] = {}
    train_landmarks: dict[str, LandmarkSet] = {}
    train_mm: dict[str, float] = {}
    for case_id in split.train:
        record = by_id[case_id]
        baseline, mm = load_baseline(record)
        for name in LANDMARK_NAMES:
            if name not in baseline:
                raise MissingLandmark(case_id, name)
        train_images[case_id] = load_image(record.image_path)
        train_landmarks[case_id] = baseline
        train_mm[case_id] = mm

    regions = learn_regions(
        [((train_images[c].width, train_images[c].height), train_landmarks[c])
         for c in split.train],
        margin=config["region.margin"], case_ids=list(split.train))

    enhance = (config["enhance.tile"], config["enhance.clip"])
    weight_dir = config["template.weight_dir"]
    templates: dict[str, WeightedTemplate] = {}
    for name in TEMPLATE_MATCHED + AUX_TEMPLATE_MATCHED:
        crops = []
        for case_id in split.train:
            img = train_images[case_id]
            point = train_landmarks[case_id][name]
            region = region_for(regions, name, img)
            crops.append(_template_crop(img, point, region,
                                        config["template.max_size"], enhance))
        weight_map = None
        if weight_dir:
            candidate = Path(weight_dir) / f"{name}.pgm"
            if candidate.exists():
                weight_map = load_weight_map(candidate)
        templates[name] = build_template(crops, name, weight_map=weight_map)

    lengths_mm = {}
    for line_name, (end_a, end_b) in LINE_ENDPOINTS.items():
        per_case = []
        for case_id in split.train:
            ax, ay = train_landmarks[case_id][end_a]
            bx, by = train_landmarks[case_id][end_b]
            per_case.append(((ax - bx) ** 2 + (ay - by) ** 2) ** 0.5
                            * train_mm[case_id])
        lengths_mm[line_name] = sum(per_case) / len(per_case)
    thresholds = thresholds_from_lengths(lengths_mm, LINE_ENDPOINTS_INDEPENDENT)

    model_dir.mkdir(parents=True, exist_ok=True)
    save_region_model(regions, model_dir / "model.regions")
    for name, template in templates.items():
        save_template(template, model_dir / "templates" / name)
    save_degree_thresholds(thresholds, model_dir / "thresholds.degthr")
    (model_dir / "line_lengths.txt").write_text(
        "".join(f"{name} {lengths_mm[name]!r}\n" for name in LINE_NAMES),
        encoding="utf-8")
    split_lines = [f"# split seed={split.seed}"]
    split_lines += [f"train {c}" for c in split.train]
    split_lines += [f"test {c}" for c in split.test]
    (model_dir / "split.txt").write_text("\n".join(split_lines) + "\n",
                                         encoding="utf-8")
    (model_dir / "config.txt").write_text(config.snapshot(), encoding="utf-8")

    summary = [
        f"trained on {len(split.train)} cases ({len(split.test)} held out), "
        f"seed {split.seed}",
        f"regions: {len(regions.entries)} windows (margin {regions.margin})",
        "templates: " + ", ".join(
            f"{n}:{templates[n].shape[1]}x{templates[n].shape[0]}"
            for n in TEMPLATE_MATCHED + AUX_TEMPLATE_MATCHED),
        "line lengths (mm): " + ", ".join(
            f"{n}={lengths_mm[n]:.1f}" for n in LINE_NAMES),
        f"model written to {model_dir}",
    ]
    return "\n".join(summary)


# --- detection ------------------------------------------------------------------


@dataclass(frozen=True)
class Model:
    regions: RegionModel
    templates: dict[str, WeightedTemplate]
    thresholds: DegreeThresholds
    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]


def load_model(model_dir) -> Model:
    model_dir = Path(model_dir)
    regions = load_region_model(model_dir / "model.regions")
    templates = {}
    for name in TEMPLATE_MATCHED + AUX_TEMPLATE_MATCHED:
        templates[name] = load_template(model_dir / "templates" / name)
    thresholds = load_degree_thresholds(model_dir / "thresholds.degthr")
    train_ids, test_ids = [], []
    split_file = model_dir / "split.txt"
    if split_file.exists():
        for line in split_file.read_text(encoding="utf-8").splitlines():
            fields = line.split()
            if len(fields) == 2 and fields[0] == "train":
                train_ids.append(fields[1])
            elif len(fields) == 2 and fields[0] == "test":
                test_ids.append(fields[1])
    return Model(regions=regions, templates=templates, thresholds=thresholds,
                 train_ids=tuple(train_ids), test_ids=tuple(test_ids))


@dataclass(frozen=True)
class CaseDetection:
    result: DetectionResult
    po_point: Point
    frankfort_inclinations: tuple[float, float]  # (Or-Po, bent S-N) candidates
    match_scores: dict[str, float]


def _edge_line_params(config: PipelineConfig) -> EdgeLineParams:
    return EdgeLineParams(
        canny_sigma=config["canny.sigma"],
        canny_low=config["canny.low_ratio"],
        canny_high=config["canny.high_ratio"],
        enhance_tile=config["enhance.tile"],
        enhance_clip=config["enhance.clip"],
        enhance_first=config["edge.enhance_first"],
        ransac=RansacParams(seed=config["ransac.seed"],
                            iterations=config["ransac.iterations"],
                            inlier_band=config["ransac.inlier_band"]))


def detect_case(img: GrayImage, model: Model, config: PipelineConfig,
                case_id: str, facing: chin_mod.Facing) -> CaseDetection:
    canny_params = chin_mod.CannyParams(sigma=config["canny.sigma"],
                                        low_ratio=config["canny.low_ratio"],
                                        high_ratio=config["canny.high_ratio"])
    enhance_params = (chin_mod.EnhanceParams(config["enhance.tile"],
                                             config["enhance.clip"])
                      if config["edge.enhance_first"] else None)
    points = chin_mod.detect_chin(img, model.regions, facing, canny_params,
                                  enhance=enhance_params,
                                  gn_rule=config["gn.rule"])

    enhance = (config["enhance.tile"], config["enhance.clip"])
    scores: dict[str, float] = {}
    matched: dict[str, Point] = {}
    for name in TEMPLATE_MATCHED + AUX_TEMPLATE_MATCHED:
        template = model.templates[name]
        region = region_for(model.regions, name, img)
        th, tw = template.shape
        search = region.inflate(tw // 2 + 1, th // 2 + 1)
        matched[name], scores[name] = match(template, img, search,
                                            enhance=enhance)
    points.update({name: matched[name] for name in TEMPLATE_MATCHED})

    lines: dict[str, Line2D] = {}
    candidates = frankfort_candidates(points["Or"], matched["Po"], points["S"],
                                      points["N"],
                                      config["frankfort.sn_offset_deg"])
    lines["Po-Or"] = frankfort_line(points["Or"], matched["Po"], points["S"],
                                    points["N"],
                                    config["frankfort.sn_offset_deg"])
    line_params = _edge_line_params(config)
    for line_name in EDGE_FITTED_LINES:
        region = region_for(model.regions, LINE_REGION_KEYS[line_name], img)
        lines[line_name] = estimate_edge_line(img, region, line_params)

    result = DetectionResult(
        case_id=case_id,
        points={name: points[name] for name in DETECTED_POINTS},
        lines=lines,
        provenance={name: MECHANISM_OF[name]
                    for name in DETECTED_POINTS + LINE_NAMES})
    return CaseDetection(result=result, po_point=matched["Po"],
                         frankfort_inclinations=candidates, match_scores=scores)


def _write_lines_file(lines: dict[str, Line2D], path: Path) -> None:
    rows = []
    for name in LINE_NAMES:
        line = lines[name]
        rows.append(f"{name} {line.point[0]!r} {line.point[1]!r} "
                    f"{line.direction[0]!r} {line.direction[1]!r} "
                    f"{line.inclination_deg!r}")
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")


def read_lines_file(path) -> dict[str, Line2D]:
    lines = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        fields = raw.split()
        if len(fields) != 6:
            continue
        name = fields[0]
        x, y, dx, dy, _ = (float(f) for f in fields[1:])
        lines[name] = Line2D.from_direction((x, y), dx, dy)
    return lines


def _write_overlay(img: GrayImage, detection: CaseDetection, model: Model,
                   baseline: LandmarkSet | None, path: Path) -> None:
    rgb = to_rgb(img)
    full = Region(0, 0, img.width, img.height)
    for line_name, line in detection.result.lines.items():
        if line_name in LINE_REGION_KEYS:
            span = region_for(model.regions, LINE_REGION_KEYS[line_name], img)
        else:  # Frankfort spans the matched Or / Po windows
            span = region_for(model.regions, "Or", img).union_bbox(
                region_for(model.regions, "Po", img))
        draw_line(rgb, line, span.intersect(full) or full)
    if baseline is not None:
        for name, (x, y) in baseline.entries.items():
            draw_circle(rgb, x, y, color=EXPERT_COLOR)
    for name, (x, y) in detection.result.points.items():
        draw_cross(rgb, x, y, color=DETECTED_COLOR)
    save_ppm(rgb, path)


def run_detect(config: PipelineConfig, model_dir, input_dir,
               out_dir) -> tuple[list[str], list[tuple[str, str]]]:
    """Detect every case in input_dir; failures are recorded, not fatal."""
    model = load_model(model_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = discover_corpus(input_dir)
    done: list[str] = []
    failures: list[tuple[str, str]] = []
    for record in records:
        try:
            img = load_image(record.image_path)
            facing = case_facing(record, config)
            detection = detect_case(img, model, config, record.case_id, facing)
            mm = img.mm_per_pixel
            save_annotations(
                LandmarkSet(dict(detection.result.points), source="detected"),
                out_dir / f"{record.case_id}.det.lmk", mm,
                facing=facing.direction)
            _write_lines_file(detection.result.lines,
                              out_dir / f"{record.case_id}.lines.txt")
            baseline = None
            try:
                baseline, _ = load_baseline(record)
            except HaldError:
                pass
            _write_overlay(img, detection, model, baseline,
                           out_dir / f"{record.case_id}.ppm")
            done.append(record.case_id)
        except HaldError as exc:
            failures.append((record.case_id, f"{type(exc).__name__}: {exc}"))
    (out_dir / "failures.txt").write_text(
        "".join(f"{case}\t{message}\n" for case, message in failures),
        encoding="utf-8")
    (out_dir / "config.txt").write_text(config.snapshot(), encoding="utf-8")
    return done, failures


# --- evaluation -----------------------------------------------------------------


def _resolve_thresholds(config: PipelineConfig, model_dir) -> DegreeThresholds:
    if config["thresholds.file"]:
        return load_degree_thresholds(config["thresholds.file"])
    model_file = Path(model_dir) / "thresholds.degthr"
    if model_file.exists():
        return load_degree_thresholds(model_file)
    return default_degree_thresholds()


def run_evaluate(config: PipelineConfig, det_dir, truth_dir, model_dir,
                 out_dir, allow_train: bool = False) -> EvaluationReport:
    det_dir = Path(det_dir)
    out_dir = Path(out_dir)
    model = load_model(model_dir)
    thresholds = _resolve_thresholds(config, model_dir)
    truth_records = {r.case_id: r for r in discover_corpus(truth_dir)}

    detected_ids = sorted(p.name[:-len(".det.lmk")]
                          for p in det_dir.glob("*.det.lmk"))
    case_ids = [c for c in detected_ids if c in truth_records]
    skipped_train = [c for c in case_ids if c in model.train_ids]
    if not allow_train:
        case_ids = [c for c in case_ids if c not in model.train_ids]
    if not case_ids:
        raise NoMatchingCases(
            "no scorable cases (did you mean --allow-train? "
            f"{len(skipped_train)} cases are in the train split)")

    errors: dict[str, list[float]] = {name: [] for name in REPORT_ITEM_ORDER}
    for case_id in case_ids:
        record = truth_records[case_id]
        baseline, mm = load_baseline(record)
        detected, _ = load_annotations(det_dir / f"{case_id}.det.lmk")
        det_lines = read_lines_file(det_dir / f"{case_id}.lines.txt")
        for name in DETECTED_POINTS:
            errors[name].append(point_error_mm(detected[name], baseline[name], mm))
        for line_name, (end_a, end_b) in LINE_ENDPOINTS.items():
            truth_line = Line2D.from_points(baseline[end_a], baseline[end_b])
            errors[line_name].append(line_error_deg(det_lines[line_name],
                                                    truth_line))

    report = build_report(errors, thresholds)
    out_dir.mkdir(parents=True, exist_ok=True)
    emit_report(report, out_dir)
    (out_dir / "config.txt").write_text(config.snapshot(), encoding="utf-8")
    return report


def format_report_table(report: EvaluationReport,
                        thresholds: DegreeThresholds) -> str:
    """Success-rate table: items as rows, threshold levels as columns."""
    rows = [f"{'item':<10}{'<1mm':>9}{'<2mm':>9}{'<3mm':>9}{'<4mm':>9}"]
    for item in report.items:
        cells = "".join(f"{100.0 * r:>8.2f}%" for r in item.ratios)
        rows.append(f"{item.name:<10}{cells}")
    cells = "".join(f"{100.0 * r:>8.2f}%" for r in report.aggregate)
    rows.append(f"{'All':<10}{cells}")
    rows.append("line rows use their degree-equivalent thresholds:")
    for name in LINE_NAMES:
        if name in thresholds.rows:
            levels = "/".join(f"{t:.2f}" for t in thresholds.rows[name])
            rows.append(f"  {name}: {levels} deg")
    return "\n".join(rows)
