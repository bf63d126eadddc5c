/** HTML/SVG string renderers for the graph pane and option lists. */

import { escapeHtml } from "./cards.js";
import {
  GraphView,
  IDENTITY_TRANSFORM,
  layoutGraph,
  NodePosition,
  toViewCoords,
  ViewTransform,
} from "./graphText.js";
import type { SubgraphHighlight } from "./annotate.js";
import { edgeKey } from "./annotate.js";
import type { OptionWire } from "./types.js";

const NODE_WIDTH = 140;
const NODE_HEIGHT = 44;

export function renderGraphSvg(
  view: GraphView,
  transform: ViewTransform = IDENTITY_TRANSFORM,
  highlight?: SubgraphHighlight,
): string {
  const positions = layoutGraph(view);
  const byId = new Map<string, NodePosition>(positions.map((p) => [p.id, p]));
  const labelById = new Map(view.nodes.map((n) => [n.id, n.label]));

  const edges = view.edges
    .map((edge) => {
      const from = byId.get(edge.source);
      const to = byId.get(edge.target);
      if (!from || !to) return "";
      const a = toViewCoords(transform, from.x + NODE_WIDTH / 2, from.y + NODE_HEIGHT / 2);
      const b = toViewCoords(transform, to.x + NODE_WIDTH / 2, to.y + NODE_HEIGHT / 2);
      const lit = highlight?.edgeKeys.has(edgeKey(edge.source, edge.target, edge.label));
      return (
        `<g class="edge${lit ? " highlight" : ""}" data-edge="${escapeHtml(edgeKey(edge.source, edge.target, edge.label))}">` +
        `<line x1="${a.x}" y1="${a.y}" x2="${b.x}" y2="${b.y}"/>` +
        `<text x="${(a.x + b.x) / 2}" y="${(a.y + b.y) / 2 - 4}">${escapeHtml(edge.label)}</text>` +
        `</g>`
      );
    })
    .join("");

  const nodes = positions
    .map((p) => {
      const at = toViewCoords(transform, p.x, p.y);
      const size = { w: NODE_WIDTH * transform.scale, h: NODE_HEIGHT * transform.scale };
      const lit = highlight?.nodeIds.has(p.id);
      return (
        `<g class="node${lit ? " highlight" : ""}" data-node="${escapeHtml(p.id)}">` +
        `<rect x="${at.x}" y="${at.y}" width="${size.w}" height="${size.h}" rx="8"/>` +
        `<text x="${at.x + size.w / 2}" y="${at.y + size.h / 2 + 4}">${escapeHtml(labelById.get(p.id) ?? p.id)}</text>` +
        `</g>`
      );
    })
    .join("");

  return `<svg class="graph-view" data-direction="${view.direction}">${edges}${nodes}</svg>`;
}

export function renderOptionList(options: OptionWire[], chosenTitle: string | null): string {
  return options
    .map((o) => {
      const chosen = o.title === chosenTitle ? " chosen" : "";
      const badge = o.goalCategory ? `<span class="category">${escapeHtml(o.goalCategory)}</span>` : "";
      return (
        `<button class="option${chosen}" data-title="${escapeHtml(o.title)}">` +
        `<strong>${escapeHtml(o.title)}</strong>${badge}<span>${escapeHtml(o.description)}</span></button>`
      );
    })
    .join("\n");
}

export function renderDraftBanner(status: string): string {
  if (status !== "draft") return "";
  return (
    `<div class="draft-banner">Draft — commit to make it permanent ` +
    `<button class="commit">Commit</button><button class="discard">Discard</button></div>`
  );
}

export function renderStaleBadge(stale: boolean): string {
  return stale ? `<span class="stale-badge" title="an earlier stage changed">stale</span>` : "";
}
