"""uaradar: measure how similar two captured web pages are along five axes
(HTML structure, HTML content, JavaScript, CSS, visual rendering), strip
dynamic content via dual-visit backbones, and classify the usability
impact of UA-dependent changes."""

from .backbone import Backbone, effective_visual_dissimilarity, extract_backbone
from .domstruct import (
    DomNode,
    DomTree,
    MatchGraph,
    parse_html,
    serialize_html,
    sftm_match,
    structure_similarity,
    ted_oracle,
)
from .impact import ChangeDelta, ImpactReport, classify_impact, extract_delta
from .radar import RadarReport, aggregate_reports, compare_backbones, emit_radar_svg
from .snapshot import (
    BrowserConfig,
    ResourcePairing,
    ResourceRecord,
    Snapshot,
    load_snapshot,
    pair_resources,
    write_snapshot,
)
from .textdiff import (
    ContentScore,
    DiffScript,
    content_similarity,
    extract_text,
    hunk_levenshtein,
    myers_diff,
)
from .assetdiff import (
    EditScript,
    SyntaxTree,
    apply_edit_script,
    asset_similarity,
    gumtree_diff,
    parse_css,
    parse_js_lexical,
    simhash64,
)
from .visualdiff import (
    BinaryImage,
    Contour,
    ContourProfile,
    binarize_otsu,
    contour_profile,
    find_contours,
    visual_similarity,
)

__version__ = "0.1.0"
