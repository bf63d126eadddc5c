/** Read-only parsing and layout of the server's graph text for display.
 * Editing always round-trips through the API; this module never mutates. */

export interface GraphNode {
  id: string;
  label: string;
}

export interface GraphEdge {
  source: string;
  target: string;
  label: string;
}

export interface GraphView {
  direction: "LR" | "TD";
  nodes: GraphNode[];
  edges: GraphEdge[];
}

const NODE_LINE = /^([^\s[\]|]+)\[(.+)\]$/;
const EDGE_LINE = /^([^\s[\]|]+)\s*-->\s*\|([^|]+)\|\s*([^\s[\]|]+)$/;

/** Parse the graph-format text the API serves. Unknown lines are skipped:
 * rendering should degrade, not crash, on content the server accepted. */
export function parseGraphText(text: string): GraphView {
  const view: GraphView = { direction: "LR", nodes: [], edges: [] };
  for (const raw of text.split("\n")) {
    const line = raw.trim();
    if (!line || line.startsWith("```")) continue;
    if (line === "graph LR" || line === "graph TD") {
      view.direction = line.endsWith("TD") ? "TD" : "LR";
      continue;
    }
    const node = NODE_LINE.exec(line);
    if (node) {
      view.nodes.push({ id: node[1], label: node[2] });
      continue;
    }
    const edge = EDGE_LINE.exec(line);
    if (edge) {
      view.edges.push({ source: edge[1], target: edge[3], label: edge[2] });
    }
  }
  return view;
}

export interface NodePosition {
  id: string;
  x: number;
  y: number;
  layer: number;
}

export interface LayoutOptions {
  layerGap: number;
  nodeGap: number;
}

const DEFAULT_LAYOUT: LayoutOptions = { layerGap: 180, nodeGap: 90 };

/** Layered layout: nodes are ranked by longest path from the roots, then
 * stacked within each layer. LR lays layers out horizontally, TD vertically. */
export function layoutGraph(view: GraphView, options: LayoutOptions = DEFAULT_LAYOUT): NodePosition[] {
  const layer = new Map<string, number>();
  for (const node of view.nodes) layer.set(node.id, 0);

  // Longest-path layering; ranks are capped at node count so cycles settle.
  const maxLayer = Math.max(0, view.nodes.length - 1);
  for (let pass = 0; pass < view.nodes.length; pass += 1) {
    let changed = false;
    for (const edge of view.edges) {
      const from = layer.get(edge.source);
      const to = layer.get(edge.target);
      if (from === undefined || to === undefined) continue;
      if (to < from + 1 && from + 1 <= maxLayer) {
        layer.set(edge.target, from + 1);
        changed = true;
      }
    }
    if (!changed) break;
  }

  const byLayer = new Map<number, string[]>();
  for (const node of view.nodes) {
    const l = layer.get(node.id) ?? 0;
    if (!byLayer.has(l)) byLayer.set(l, []);
    byLayer.get(l)!.push(node.id);
  }

  const positions: NodePosition[] = [];
  for (const [l, ids] of byLayer) {
    ids.forEach((id, index) => {
      const along = l * options.layerGap;
      const across = index * options.nodeGap;
      positions.push(
        view.direction === "LR"
          ? { id, x: along, y: across, layer: l }
          : { id, x: across, y: along, layer: l },
      );
    });
  }
  return positions;
}

export interface ViewTransform {
  scale: number;
  offsetX: number;
  offsetY: number;
}

export const IDENTITY_TRANSFORM: ViewTransform = { scale: 1, offsetX: 0, offsetY: 0 };

export const MIN_SCALE = 0.25;
export const MAX_SCALE = 4;

/** Zoom about a fixed point in view coordinates, clamping the scale. */
export function zoomAt(t: ViewTransform, factor: number, pivotX: number, pivotY: number): ViewTransform {
  const scale = Math.min(MAX_SCALE, Math.max(MIN_SCALE, t.scale * factor));
  const applied = scale / t.scale;
  return {
    scale,
    offsetX: pivotX - (pivotX - t.offsetX) * applied,
    offsetY: pivotY - (pivotY - t.offsetY) * applied,
  };
}

export function pan(t: ViewTransform, dx: number, dy: number): ViewTransform {
  return { ...t, offsetX: t.offsetX + dx, offsetY: t.offsetY + dy };
}

export function toViewCoords(t: ViewTransform, x: number, y: number): { x: number; y: number } {
  return { x: x * t.scale + t.offsetX, y: y * t.scale + t.offsetY };
}
