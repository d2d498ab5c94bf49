// Minimal virtual nodes: renderers build trees that tests inspect directly
// and the browser entry point realizes with document.createElement.

export interface VNode {
  tag: string;
  attrs: Record<string, string>;
  children: (VNode | string)[];
  on?: Record<string, (event: Event) => void>;
}

export function h(
  tag: string,
  attrs: Record<string, string> = {},
  children: (VNode | string)[] = [],
  on?: Record<string, (event: Event) => void>,
): VNode {
  return { tag, attrs, children, on };
}

export function text(node: VNode | string): string {
  if (typeof node === "string") return node;
  return node.children.map(text).join("");
}

export function findAll(node: VNode | string, predicate: (n: VNode) => boolean): VNode[] {
  if (typeof node === "string") return [];
  const hits = predicate(node) ? [node] : [];
  for (const child of node.children) {
    hits.push(...findAll(child, predicate));
  }
  return hits;
}

export function byClass(node: VNode | string, cls: string): VNode[] {
  return findAll(node, (n) => (n.attrs.class ?? "").split(" ").includes(cls));
}

const VOID_TAGS = new Set(["input", "br", "hr", "img"]);

function escapeHtml(value: string): string {
  return value
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export function toHtml(node: VNode | string): string {
  if (typeof node === "string") return escapeHtml(node);
  const attrs = Object.entries(node.attrs)
    .map(([key, value]) => ` ${key}="${escapeHtml(value)}"`)
    .join("");
  if (VOID_TAGS.has(node.tag)) return `<${node.tag}${attrs}>`;
  const inner = node.children.map(toHtml).join("");
  return `<${node.tag}${attrs}>${inner}</${node.tag}>`;
}

/** Realize a vnode tree in the browser. */
export function mount(node: VNode | string, parent: Element): Node {
  if (typeof node === "string") {
    const leaf = document.createTextNode(node);
    parent.appendChild(leaf);
    return leaf;
  }
  const el = document.createElement(node.tag);
  for (const [key, value] of Object.entries(node.attrs)) {
    if (key === "value" && el instanceof HTMLInputElement) {
      el.value = value;
    } else if (key === "checked" && el instanceof HTMLInputElement) {
      el.checked = value === "true";
    } else {
      el.setAttribute(key, value);
    }
  }
  for (const [event, handler] of Object.entries(node.on ?? {})) {
    el.addEventListener(event, handler);
  }
  for (const child of node.children) {
    mount(child, el);
  }
  parent.appendChild(el);
  return el;
}
