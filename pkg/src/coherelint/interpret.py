"""Per-token importance for a trained recurrent model.

Two attributions: gradient times input (exact for these differentiable
models) and occlusion (probability drop when a token row is zeroed). Scores
render as an HTML page with green for support of the predicted class and red
against, intensity scaled by magnitude.
"""

import html
from dataclasses import dataclass

import numpy as np

from . import corpus
from .neurnet import forward, forward_batch, input_gradient

METHOD_GRAD_INPUT = "grad_input"
METHOD_OCCLUSION = "occlusion"


@dataclass
class SaliencyReport:
    tokens: list
    scores: np.ndarray
    method: str
    predicted: str
    predicted_prob: float


def saliency_grad_input(model, tokens, encoded):
    """score_t = d(logit of predicted class)/d(x_t) . x_t, per non-padding row."""
    out = forward(model, encoded)
    pred = int(out["probs"].argmax())
    dX = input_gradient(model, encoded, pred)
    n = encoded.true_len
    scores = np.sum(dX[:n] * encoded.matrix[:n], axis=1)
    return SaliencyReport(
        tokens=list(tokens[:n]),
        scores=scores,
        method=METHOD_GRAD_INPUT,
        predicted=corpus.LABELS[pred],
        predicted_prob=float(out["probs"][pred]),
    )


def saliency_occlusion(model, tokens, encoded):
    """score_t = p(predicted) on the original minus p(predicted) with row t zeroed."""
    out = forward(model, encoded)
    pred = int(out["probs"].argmax())
    p_orig = float(out["probs"][pred])
    n = encoded.true_len
    if n == 0:
        scores = np.zeros(0)
    else:
        variants = np.repeat(encoded.matrix[None, :, :], n, axis=0)
        for t in range(n):
            variants[t, t, :] = 0.0
        _, probs = forward_batch(model, variants)
        scores = p_orig - probs[:, pred]
    return SaliencyReport(
        tokens=list(tokens[:n]),
        scores=scores,
        method=METHOD_OCCLUSION,
        predicted=corpus.LABELS[pred],
        predicted_prob=p_orig,
    )


def top_token_sign_matches(a, b):
    """True when both reports give the same sign to a's top-magnitude token."""
    if len(a.scores) == 0:
        return True
    k = int(np.argmax(np.abs(a.scores)))
    return bool(np.sign(a.scores[k]) == np.sign(b.scores[k]))


def render_html(report):
    """Standalone HTML page for a saliency report.

    Token backgrounds: green for positive scores, red for negative, opacity
    |score| / max|score| quantized to 256 levels; zero scores stay neutral.
    """
    max_abs = float(np.max(np.abs(report.scores))) if len(report.scores) else 0.0
    spans = []
    for token, score in zip(report.tokens, report.scores):
        safe = html.escape(token)
        title = html.escape(f"{token}: {score:+.6g}")
        if max_abs > 0.0 and score != 0.0:
            alpha = round(255.0 * abs(score) / max_abs) / 255.0
            color = "0,140,0" if score > 0 else "200,0,0"
            style = f"background-color: rgba({color},{alpha:.6f});"
            spans.append(f'<span style="{style}" title="{title}">{safe}</span>')
        else:
            spans.append(f'<span title="{title}">{safe}</span>')
    body = "\n".join(
        [
            "<h1>Token attribution</h1>",
            f"<p>predicted: <b>{html.escape(report.predicted)}</b> "
            f"(p = {report.predicted_prob:.4f}), "
            f"method: {html.escape(report.method)}</p>",
            '<p class="legend">'
            '<span style="background-color: rgba(0,140,0,0.6);">green</span> '
            "supports the predicted class, "
            '<span style="background-color: rgba(200,0,0,0.6);">red</span> '
            "works against it; intensity is relative to the strongest token."
            "</p>",
            '<p class="tokens">' + " ".join(spans) + "</p>",
        ]
    )
    return (
        "<!DOCTYPE html>\n"
        '<html><head><meta charset="utf-8"/>'
        "<title>Token attribution</title>"
        "<style>p.tokens { font-family: monospace; line-height: 1.8; }</style>"
        "</head><body>\n" + body + "\n</body></html>\n"
    )


def scores_csv(report):
    """Raw scores as CSV, one row per token in sequence order."""
    lines = ["position,token,score"]
    for t, (token, score) in enumerate(zip(report.tokens, report.scores)):
        quoted = '"' + token.replace('"', '""') + '"'
        lines.append(f"{t},{quoted},{score!r}")
    return "\n".join(lines) + "\n"
