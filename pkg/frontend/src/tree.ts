/** Pure hierarchy-tree helpers: snapshot -> nested model, highlight rules. */

import type { HierarchySnapshot } from "./api.js";

export interface TreeNode {
  id: number;
  annotation: string | null;
  encounterCount: number;
  children: TreeNode[];
}

export function buildTree(snapshot: HierarchySnapshot): TreeNode {
  const byId = new Map(snapshot.nodes.map((n) => [n.id, n]));
  const assemble = (id: number, seen: Set<number>): TreeNode => {
    const node = byId.get(id);
    if (!node) throw new Error(`snapshot links to missing node ${id}`);
    if (seen.has(id)) throw new Error(`snapshot contains a cycle through node ${id}`);
    seen.add(id);
    return {
      id: node.id,
      annotation: node.annotation,
      encounterCount: node.encounters.length,
      children: node.children.map((c) => assemble(c, seen)),
    };
  };
  const root = assemble(snapshot.root, new Set());
  const reachable = countNodes(root);
  if (reachable !== snapshot.nodes.length) {
    throw new Error(`snapshot has ${snapshot.nodes.length} nodes, only ${reachable} reachable`);
  }
  return root;
}

export function countNodes(node: TreeNode): number {
  return 1 + node.children.reduce((acc, c) => acc + countNodes(c), 0);
}

/** Node roles for the session's current step (colors follow the legend). */
export interface Highlights {
  /** node the pending question is about (green) */
  queried?: number;
  /** genus currently under refinement (cyan) */
  genus?: number;
  /** node that received the newest encounter (red) */
  placed?: number;
}

export function highlightClass(id: number, h: Highlights): string | null {
  if (id === h.queried) return "hl-query";
  if (id === h.placed) return "hl-encounter";
  if (id === h.genus) return "hl-genus";
  return null;
}

export function highlightedIds(h: Highlights): number[] {
  const ids = new Set<number>();
  for (const value of [h.queried, h.genus, h.placed]) {
    if (value !== undefined) ids.add(value);
  }
  return [...ids];
}

export function nodeLabel(node: TreeNode): string {
  const name = node.annotation ?? `node ${node.id}`;
  const count = node.encounterCount > 0 ? ` (${node.encounterCount})` : "";
  return `${name}${count}`;
}
