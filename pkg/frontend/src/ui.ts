/**
 * Studio UI: three panels over the HTTP service.
 *
 * (A) Mood board: uploaded reference images with draw-a-box subject
 *     extraction and one-click color/style/concept tools; source tokens
 *     render as draggable chips with origin badges.
 * (B) Token panel: placed instances with live geometry, selection, group
 *     outlines, link edges, name field, a textual editor with `#`
 *     autocompletion, diagnostics badges, and the Generate button with
 *     staged playback.
 * (C) History strip: recorded entries as final-image thumbnails; clicking
 *     one forks it into a fresh panel.
 *
 * All document semantics live server-side; this file only maps pointer
 * gestures to commands (one command per gesture) and redraws from the
 * store's state on every change.
 */

import { StudioClient } from './api.js';
import { badgesFor, diagnosticsToBadges, type Badge } from './badges.js';
import * as gestures from './gestures.js';
import { resizeHandles } from './handles.js';
import { playStages } from './playback.js';
import { PanelStore } from './store.js';
import type {
  HistoryEntrySummary,
  InstanceDoc,
  InstanceKind,
  LexiconDoc,
  NormRect,
  SourceTokenDoc,
} from './types.js';

const PANEL_SIZE = 560;

interface DragState {
  mode: 'move' | 'resize' | 'link' | 'place' | 'bbox';
  instanceId?: string;
  tokenId?: string;
  imageId?: string;
  startX: number;
  startY: number;
  lastX: number;
  lastY: number;
}

export class StudioApp {
  private tokens: SourceTokenDoc[] = [];
  private badges: Badge[] = [];
  private history: HistoryEntrySummary[] = [];
  private selection = new Set<string>();
  private drag: DragState | null = null;
  private stopPlayback: (() => void) | null = null;

  private readonly boardPane: HTMLElement;
  private readonly tokenTray: HTMLElement;
  private readonly panelPane: HTMLElement;
  private readonly edgeLayer: SVGSVGElement;
  private readonly resultImage: HTMLImageElement;
  private readonly resultLabel: HTMLElement;
  private readonly historyPane: HTMLElement;
  private readonly statusLine: HTMLElement;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: StudioClient,
    private readonly sessionId: string,
    private store: PanelStore,
  ) {
    root.classList.add('lexcraft-studio');
    this.boardPane = el('div', 'board-pane');
    this.tokenTray = el('div', 'token-tray');
    this.panelPane = el('div', 'panel-pane');
    this.panelPane.style.width = `${PANEL_SIZE}px`;
    this.panelPane.style.height = `${PANEL_SIZE}px`;
    this.edgeLayer = document.createElementNS('http://www.w3.org/2000/svg', 'svg');
    this.edgeLayer.classList.add('edge-layer');
    this.resultImage = document.createElement('img');
    this.resultImage.classList.add('result-image');
    this.resultLabel = el('div', 'result-label');
    this.historyPane = el('div', 'history-pane');
    this.statusLine = el('div', 'status-line');
    this.buildSkeleton();
    this.wireStore();
  }

  /** Create a session + lexicon and mount the studio. */
  static async mount(root: HTMLElement, baseUrl: string): Promise<StudioApp> {
    const client = new StudioClient(baseUrl);
    const sessionId = await client.createSession();
    const lexicon = await client.createLexicon(sessionId);
    const app = new StudioApp(
      root,
      client,
      sessionId,
      await PanelStore.open(client, sessionId, lexicon.lexicon_id),
    );
    app.render();
    return app;
  }

  // -- skeleton -----------------------------------------------------------

  private buildSkeleton(): void {
    const board = el('section', 'column');
    board.append(heading('Mood board'), this.buildBoardTools(), this.boardPane, this.tokenTray);

    const panel = el('section', 'column');
    const panelTools = el('div', 'toolbar');
    panelTools.append(
      button('Text token', () => this.addTextual()),
      button('Imaginative', () => this.addImaginative()),
      button('Group', () => this.groupSelected()),
      button('Clear panel', () => void this.submitQuiet(gestures.clearPanel())),
      button('Generate', () => void this.generate()),
    );
    const result = el('div', 'result-box');
    result.append(this.resultImage, this.resultLabel);
    panel.append(heading('Token panel'), panelTools, this.panelPane, result, this.statusLine);
    this.panelPane.append(this.edgeLayer);
    this.panelPane.addEventListener('pointermove', (ev) => this.onPanelPointerMove(ev));
    this.panelPane.addEventListener('pointerup', (ev) => void this.onPanelPointerUp(ev));

    const history = el('section', 'column');
    history.append(heading('History'), this.historyPane);

    this.root.append(board, panel, history);
  }

  private buildBoardTools(): HTMLElement {
    const tools = el('div', 'toolbar');
    const picker = document.createElement('input');
    picker.type = 'file';
    picker.accept = 'image/png';
    picker.addEventListener('change', () => void this.uploadPicked(picker));
    tools.append(picker);
    return tools;
  }

  // -- mood board (A) -----------------------------------------------------

  private async uploadPicked(picker: HTMLInputElement): Promise<void> {
    const file = picker.files?.[0];
    if (!file) {
      return;
    }
    const bytes = new Uint8Array(await file.arrayBuffer());
    const ref = await this.client.uploadImage(this.sessionId, bytes);
    this.addBoardImage(ref.image_id, bytes);
  }

  private addBoardImage(imageId: string, png: Uint8Array): void {
    const wrap = el('div', 'board-image');
    wrap.dataset.imageId = imageId;
    const img = document.createElement('img');
    img.src = URL.createObjectURL(new Blob([png as BlobPart], { type: 'image/png' }));
    img.draggable = false;
    wrap.append(img);

    const band = el('div', 'rubber-band');
    wrap.append(band);
    wrap.addEventListener('pointerdown', (ev) => {
      const rect = wrap.getBoundingClientRect();
      this.drag = {
        mode: 'bbox',
        imageId,
        startX: (ev.clientX - rect.left) / rect.width,
        startY: (ev.clientY - rect.top) / rect.height,
        lastX: 0,
        lastY: 0,
      };
      wrap.setPointerCapture(ev.pointerId);
    });
    wrap.addEventListener('pointermove', (ev) => {
      if (this.drag?.mode !== 'bbox' || this.drag.imageId !== imageId) {
        return;
      }
      const rect = wrap.getBoundingClientRect();
      this.drag.lastX = (ev.clientX - rect.left) / rect.width;
      this.drag.lastY = (ev.clientY - rect.top) / rect.height;
      const box = normBox(this.drag);
      Object.assign(band.style, {
        display: 'block',
        left: `${box.x * 100}%`,
        top: `${box.y * 100}%`,
        width: `${box.w * 100}%`,
        height: `${box.h * 100}%`,
      });
    });
    wrap.addEventListener('pointerup', () => {
      if (this.drag?.mode !== 'bbox' || this.drag.imageId !== imageId) {
        return;
      }
      const box = normBox(this.drag);
      this.drag = null;
      band.style.display = 'none';
      if (box.w > 0.01 && box.h > 0.01) {
        void this.createTokens({ kind: 'subject', args: { image_id: imageId, bbox: box } });
      }
    });

    const tools = el('div', 'image-tools');
    tools.append(
      button('Colors', () =>
        void this.createTokens({ kind: 'colors:auto', args: { image_id: imageId, k: 5 } }),
      ),
      button('Style', () => void this.createTokens({ kind: 'style', args: { image_id: imageId } })),
      button('Concept', () =>
        void this.createTokens({ kind: 'concept', args: { image_id: imageId } }),
      ),
    );
    wrap.append(tools);
    this.boardPane.append(wrap);
  }

  private async createTokens(request: { kind: string; args: Record<string, unknown> }): Promise<void> {
    try {
      const created = await this.client.createTokens(this.sessionId, request);
      this.tokens.push(...created);
      this.renderTray();
    } catch (error) {
      this.setStatus(messageOf(error));
    }
  }

  private renderTray(): void {
    this.tokenTray.replaceChildren();
    const placedPerOrigin = new Map<string, number>();
    for (const inst of this.store.state().instances) {
      if (inst.origin) {
        placedPerOrigin.set(inst.origin, (placedPerOrigin.get(inst.origin) ?? 0) + 1);
      }
    }
    for (const token of this.tokens) {
      const chip = el('div', 'token-chip', `chip-${token.kind}`);
      chip.dataset.tokenId = token.token_id;
      if (token.kind === 'color' && token.rgb) {
        chip.style.background = token.rgb;
      }
      const thumb = token.thumbnail_png_b64 ?? token.style_thumbnail_png_b64;
      if (thumb) {
        const img = document.createElement('img');
        img.src = `data:image/png;base64,${thumb}`;
        img.draggable = false;
        chip.append(img);
      }
      chip.append(textSpan(labelFor(token)));
      const uses = placedPerOrigin.get(token.token_id) ?? 0;
      if (uses > 0) {
        // one origin badge no matter how many copies exist
        chip.append(badgeSpan(`x${uses}`, 'origin-badge'));
      }
      chip.addEventListener('pointerdown', (ev) => {
        this.drag = {
          mode: 'place',
          tokenId: token.token_id,
          startX: ev.clientX,
          startY: ev.clientY,
          lastX: ev.clientX,
          lastY: ev.clientY,
        };
      });
      this.tokenTray.append(chip);
    }
  }

  // -- token panel (B) ----------------------------------------------------

  private wireStore(): void {
    this.store.subscribe(() => this.render());
    this.store.onConflict(() => {
      this.setStatus('Revision conflict: another edit won; snapshot resynced.');
    });
    this.store.onReject((error) => {
      this.setStatus(`Command rejected: ${error.code}: ${error.message}`);
    });
  }

  private onPanelPointerMove(ev: PointerEvent): void {
    if (!this.drag || this.drag.mode === 'bbox') {
      return;
    }
    this.drag.lastX = ev.clientX;
    this.drag.lastY = ev.clientY;
  }

  private async onPanelPointerUp(ev: PointerEvent): Promise<void> {
    const drag = this.drag;
    this.drag = null;
    if (!drag || drag.mode === 'bbox') {
      return;
    }
    const bounds = this.panelPane.getBoundingClientRect();
    const nx = clamp01((ev.clientX - bounds.left) / bounds.width);
    const ny = clamp01((ev.clientY - bounds.top) / bounds.height);
    const state = this.store.state();

    if (drag.mode === 'place' && drag.tokenId) {
      const token = this.tokens.find((t) => t.token_id === drag.tokenId);
      const w = token?.kind === 'subject' ? 0.25 : 0.1;
      const rect: NormRect = {
        x: Math.min(nx, 1 - w),
        y: Math.min(ny, 1 - w),
        w,
        h: w,
      };
      await this.submitQuiet(gestures.dropSourceToken(drag.tokenId, rect));
      return;
    }
    const inst = state.instances.find((i) => i.instance_id === drag.instanceId);
    if (!inst) {
      return;
    }
    if (drag.mode === 'link') {
      const subject = this.subjectAt(state, nx, ny);
      if (subject && subject.instance_id !== inst.instance_id) {
        await this.submitQuiet(
          gestures.dropModifierOnSubject(inst.instance_id, subject.instance_id),
        );
      }
      return;
    }
    if (drag.mode === 'move') {
      const size = sizeOf(inst);
      const pos = {
        x: clamp01(Math.min(nx, 1 - size.w)),
        y: clamp01(Math.min(ny, 1 - size.h)),
      };
      await this.submitQuiet(gestures.dragInstance(inst, pos));
      return;
    }
    if (drag.mode === 'resize' && inst.rect) {
      const rect: NormRect = {
        x: inst.rect.x,
        y: inst.rect.y,
        w: Math.max(0.02, nx - inst.rect.x),
        h: Math.max(0.02, ny - inst.rect.y),
      };
      const draft = gestures.dragHandle(inst, rect);
      if (draft) {
        await this.submitQuiet(draft);
      }
    }
  }

  private subjectAt(state: LexiconDoc, x: number, y: number): InstanceDoc | undefined {
    return state.instances.find(
      (inst) =>
        inst.kind === 'subject' &&
        inst.rect !== null &&
        x >= inst.rect.x &&
        x <= inst.rect.x + inst.rect.w &&
        y >= inst.rect.y &&
        y <= inst.rect.y + inst.rect.h,
    );
  }

  private async submitQuiet(draft: { op: string; args: Record<string, unknown> }): Promise<void> {
    try {
      await this.store.submit(draft);
      await this.refreshBadges();
    } catch (error) {
      this.setStatus(messageOf(error));
    }
  }

  private async refreshBadges(): Promise<void> {
    try {
      const diagnostics = await this.client.validate(this.sessionId, this.store.lexiconId);
      this.badges = diagnosticsToBadges(diagnostics);
    } catch {
      this.badges = [];
    }
    this.render();
  }

  private addTextual(): void {
    const text = window.prompt('Text (use #name to reference a subject):', '');
    if (text !== null && text !== '') {
      void this.submitQuiet(gestures.createTextual(text, { x: 0.05, y: 0.05 }));
    }
  }

  private addImaginative(): void {
    void this.submitQuiet(gestures.createImaginative('medium', { x: 0.45, y: 0.45 }));
  }

  private groupSelected(): void {
    if (this.selection.size >= 2) {
      void this.submitQuiet(gestures.groupSelection([...this.selection]));
      this.selection.clear();
    }
  }

  private async generate(): Promise<void> {
    this.stopPlayback?.();
    this.setStatus('Generating…');
    try {
      const result = await this.client.generate(this.sessionId, this.store.lexiconId);
      this.setStatus(`Plan ${result.plan_hash.slice(0, 12)}… recorded as ${result.entry_id}`);
      this.stopPlayback = playStages(result.artifact, (frame, index, total) => {
        this.resultImage.src = `${this.client.baseUrl}${frame.url}`;
        this.resultLabel.textContent = `${frame.label} (${index + 1}/${total})`;
      });
      this.history = await this.client.listHistory(this.sessionId);
      this.renderHistory();
    } catch (error) {
      this.setStatus(messageOf(error));
      await this.refreshBadges();
    }
  }

  // -- rendering ----------------------------------------------------------

  render(): void {
    const state = this.store.state();
    this.renderPanel(state);
    this.renderTray();
  }

  private renderPanel(state: LexiconDoc): void {
    for (const node of [...this.panelPane.children]) {
      if (node !== this.edgeLayer) {
        node.remove();
      }
    }
    const nameOf = new Map<string, string>();
    for (const [name, id] of Object.entries(state.names)) {
      nameOf.set(id, name);
    }

    for (const group of state.groups) {
      const outline = this.groupOutline(state, group.members);
      if (outline) {
        this.panelPane.append(outline);
      }
    }
    for (const inst of state.instances) {
      this.panelPane.append(this.instanceNode(inst, nameOf.get(inst.instance_id)));
    }
    this.renderEdges(state);
  }

  private instanceNode(inst: InstanceDoc, name: string | undefined): HTMLElement {
    const node = el('div', 'instance', `kind-${inst.kind}`);
    node.dataset.instanceId = inst.instance_id;
    const size = sizeOf(inst);
    const pos = inst.position ?? { x: 0, y: 0 };
    Object.assign(node.style, {
      left: `${pos.x * PANEL_SIZE}px`,
      top: `${pos.y * PANEL_SIZE}px`,
      width: `${size.w * PANEL_SIZE}px`,
      height: `${size.h * PANEL_SIZE}px`,
    });
    if (this.selection.has(inst.instance_id)) {
      node.classList.add('selected');
    }
    if (inst.instance_id.startsWith('pending_')) {
      node.classList.add('pending');
    }

    if (inst.kind === 'imaginative') {
      // pink star glyph; the three discrete sizes come from sizeOf
      const star = textSpan('★', 'star-glyph');
      node.append(star);
    } else if (inst.kind === 'textual') {
      node.append(this.textualEditor(inst));
    } else {
      const token = this.tokens.find((t) => t.token_id === inst.origin);
      if (token?.kind === 'color' && token.rgb) {
        node.style.background = token.rgb;
      }
      const thumb = token?.thumbnail_png_b64 ?? token?.style_thumbnail_png_b64;
      if (thumb) {
        const img = document.createElement('img');
        img.src = `data:image/png;base64,${thumb}`;
        img.draggable = false;
        node.append(img);
      }
    }

    const nameField = document.createElement('input');
    nameField.classList.add('name-field');
    nameField.value = name ?? '';
    nameField.placeholder = 'name';
    nameField.addEventListener('change', () => {
      if (nameField.value) {
        void this.submitQuiet(gestures.rename(inst.instance_id, nameField.value));
      }
    });
    nameField.addEventListener('pointerdown', (ev) => ev.stopPropagation());
    node.append(nameField);

    for (const badge of badgesFor(this.badges, inst.instance_id)) {
      node.append(badgeSpan(badge.code, `badge-${badge.severity}`, badge.message));
    }

    const handles = resizeHandles(inst);
    if (handles.kind === 'free') {
      const grip = el('div', 'resize-handle');
      grip.addEventListener('pointerdown', (ev) => {
        ev.stopPropagation();
        this.drag = dragFrom(ev, 'resize', inst.instance_id);
      });
      node.append(grip);
    } else if (handles.kind === 'snap') {
      const stops = el('div', 'snap-stops');
      for (const stop of handles.stops) {
        const stopBtn = button(stop.level[0]!.toUpperCase(), () => {
          const side = stop.side;
          const rect: NormRect = {
            x: Math.min(inst.position?.x ?? 0, 1 - side),
            y: Math.min(inst.position?.y ?? 0, 1 - side),
            w: side,
            h: side,
          };
          const draft = gestures.dragHandle(inst, rect);
          if (draft) {
            void this.submitQuiet(draft);
          }
        });
        if (inst.level === stop.level) {
          stopBtn.classList.add('active');
        }
        stops.append(stopBtn);
      }
      stops.addEventListener('pointerdown', (ev) => ev.stopPropagation());
      node.append(stops);
    }
    // textual: no resize affordance at all

    if (inst.kind !== 'subject') {
      const grip = el('div', 'link-grip');
      grip.title = 'drag onto a subject to link';
      grip.addEventListener('pointerdown', (ev) => {
        ev.stopPropagation();
        this.drag = dragFrom(ev, 'link', inst.instance_id);
      });
      node.append(grip);
    }

    node.addEventListener('pointerdown', (ev) => {
      if (ev.shiftKey) {
        this.toggleSelected(inst.instance_id);
        return;
      }
      this.drag = dragFrom(ev, 'move', inst.instance_id);
    });
    return node;
  }

  private textualEditor(inst: InstanceDoc): HTMLElement {
    const input = document.createElement('input');
    input.classList.add('textual-editor');
    input.value = inst.text ?? '';
    const suggest = el('div', 'autocomplete');
    input.addEventListener('input', () => {
      const caret = input.selectionStart ?? input.value.length;
      const hit = gestures.autocompleteRefs(input.value, caret, this.store.state().names);
      suggest.replaceChildren();
      if (hit) {
        for (const candidate of hit.candidates) {
          suggest.append(
            button(`#${candidate}`, () => {
              input.value = input.value.slice(0, hit.start) + candidate + input.value.slice(caret);
              suggest.replaceChildren();
            }),
          );
        }
      }
    });
    input.addEventListener('pointerdown', (ev) => ev.stopPropagation());
    const holder = el('div', 'textual-holder');
    holder.append(input, suggest);
    return holder;
  }

  private groupOutline(state: LexiconDoc, members: string[]): HTMLElement | null {
    const rects = members
      .map((id) => state.instances.find((inst) => inst.instance_id === id))
      .filter((inst): inst is InstanceDoc => inst !== undefined)
      .map((inst) => ({ ...(inst.position ?? { x: 0, y: 0 }), ...sizeOf(inst) }));
    if (rects.length === 0) {
      return null;
    }
    const x0 = Math.min(...rects.map((r) => r.x));
    const y0 = Math.min(...rects.map((r) => r.y));
    const x1 = Math.max(...rects.map((r) => r.x + r.w));
    const y1 = Math.max(...rects.map((r) => r.y + r.h));
    const outline = el('div', 'group-outline');
    Object.assign(outline.style, {
      left: `${x0 * PANEL_SIZE - 4}px`,
      top: `${y0 * PANEL_SIZE - 4}px`,
      width: `${(x1 - x0) * PANEL_SIZE + 8}px`,
      height: `${(y1 - y0) * PANEL_SIZE + 8}px`,
    });
    return outline;
  }

  private renderEdges(state: LexiconDoc): void {
    this.edgeLayer.replaceChildren();
    this.edgeLayer.setAttribute('width', String(PANEL_SIZE));
    this.edgeLayer.setAttribute('height', String(PANEL_SIZE));
    const centers = new Map<string, { x: number; y: number }>();
    for (const inst of state.instances) {
      const size = sizeOf(inst);
      const pos = inst.position ?? { x: 0, y: 0 };
      centers.set(inst.instance_id, {
        x: (pos.x + size.w / 2) * PANEL_SIZE,
        y: (pos.y + size.h / 2) * PANEL_SIZE,
      });
    }
    // a linked group draws one edge, from the group's outline center
    for (const group of state.groups) {
      const pts = group.members
        .map((id) => centers.get(id))
        .filter((p): p is { x: number; y: number } => p !== undefined);
      if (pts.length > 0) {
        centers.set(group.group_id, {
          x: pts.reduce((acc, p) => acc + p.x, 0) / pts.length,
          y: pts.reduce((acc, p) => acc + p.y, 0) / pts.length,
        });
      }
    }
    for (const link of state.links) {
      const from = centers.get(link.modifier);
      const to = centers.get(link.target);
      if (!from || !to) {
        continue;
      }
      const line = document.createElementNS('http://www.w3.org/2000/svg', 'line');
      line.setAttribute('x1', String(from.x));
      line.setAttribute('y1', String(from.y));
      line.setAttribute('x2', String(to.x));
      line.setAttribute('y2', String(to.y));
      line.classList.add('link-edge');
      this.edgeLayer.append(line);
    }
  }

  // -- history (C) --------------------------------------------------------

  private renderHistory(): void {
    this.historyPane.replaceChildren();
    for (const entry of this.history) {
      const card = el('div', 'history-card');
      const img = document.createElement('img');
      img.src = `${this.client.baseUrl}${entry.artifact.final}`;
      img.title = `${entry.entry_id} @ rev ${entry.revision}`;
      card.append(img, textSpan(entry.entry_id));
      card.addEventListener('click', () => void this.forkEntry(entry.entry_id));
      this.historyPane.append(card);
    }
  }

  private async forkEntry(entryId: string): Promise<void> {
    try {
      const forked = await this.client.forkEntry(this.sessionId, entryId);
      this.store = await PanelStore.open(this.client, this.sessionId, forked.lexicon_id);
      this.wireStore();
      this.badges = [];
      this.selection.clear();
      this.setStatus(`Forked ${entryId} into ${forked.lexicon_id}`);
      this.render();
    } catch (error) {
      this.setStatus(messageOf(error));
    }
  }

  // -- misc ---------------------------------------------------------------

  private toggleSelected(instanceId: string): void {
    if (this.selection.has(instanceId)) {
      this.selection.delete(instanceId);
    } else {
      this.selection.add(instanceId);
    }
    this.render();
  }

  private setStatus(text: string): void {
    this.statusLine.textContent = text;
  }
}

// -- small DOM helpers ----------------------------------------------------

function el(tag: string, ...classes: string[]): HTMLElement {
  const node = document.createElement(tag);
  node.classList.add(...classes);
  return node;
}

function heading(text: string): HTMLElement {
  const node = el('h2');
  node.textContent = text;
  return node;
}

function button(label: string, onClick: () => void): HTMLButtonElement {
  const node = document.createElement('button');
  node.type = 'button';
  node.textContent = label;
  node.addEventListener('click', onClick);
  return node;
}

function textSpan(text: string, ...classes: string[]): HTMLElement {
  const node = el('span', ...classes);
  node.textContent = text;
  return node;
}

function badgeSpan(text: string, cls: string, title?: string): HTMLElement {
  const node = textSpan(text, 'badge', cls);
  if (title) {
    node.title = title;
  }
  return node;
}

function dragFrom(ev: PointerEvent, mode: DragState['mode'], instanceId: string): DragState {
  return {
    mode,
    instanceId,
    startX: ev.clientX,
    startY: ev.clientY,
    lastX: ev.clientX,
    lastY: ev.clientY,
  };
}

function normBox(drag: DragState): NormRect {
  const x = Math.min(drag.startX, drag.lastX);
  const y = Math.min(drag.startY, drag.lastY);
  return {
    x: clamp01(x),
    y: clamp01(y),
    w: Math.abs(drag.lastX - drag.startX),
    h: Math.abs(drag.lastY - drag.startY),
  };
}

function clamp01(v: number): number {
  return Math.max(0, Math.min(1, v));
}

function messageOf(error: unknown): string {
  return error instanceof Error ? `${error.name}: ${error.message}` : String(error);
}

/** Display size: sized kinds use their rect; imaginatives use preset areas. */
function sizeOf(inst: InstanceDoc): { w: number; h: number } {
  if (inst.rect) {
    return { w: inst.rect.w, h: inst.rect.h };
  }
  if (inst.kind === 'imaginative' && inst.level) {
    const side = Math.sqrt(gestures.IMAGINATIVE_AREAS[inst.level]);
    return { w: side, h: side };
  }
  return { w: 0.18, h: 0.05 };
}

function labelFor(token: SourceTokenDoc): string {
  if (token.kind === 'color') {
    return token.rgb ?? 'color';
  }
  if (token.kind === 'concept') {
    return (token.keywords ?? []).join(', ') || 'concept';
  }
  return `${token.kind} ${token.token_id.slice(-4)}`;
}

export type { InstanceKind };
