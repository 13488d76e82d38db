/**
 * Panel state store: optimistic command queue over the service.
 *
 * The server document is the single source of truth. The store keeps the
 * last confirmed document plus a FIFO of not-yet-acknowledged commands, and
 * renders their shallow local predictions on top so gestures feel instant.
 * At most one command is in flight per lexicon; each acknowledgment
 * refetches the document (all semantics live server-side), then the next
 * queued command is dispatched. A RevisionConflict drops the whole queue
 * and resyncs the snapshot; any other rejection drops only the failed
 * command (the server guarantees failed commands change nothing).
 *
 * Every acknowledged envelope is appended to an in-order log; replaying
 * that log against a fresh lexicon reproduces the document
 * revision-for-revision.
 */

import { ServiceError, StudioClient } from './api.js';
import { snapLevelForArea } from './gestures.js';
import type {
  CommandDraft,
  CommandEnvelope,
  CommandResult,
  InstanceDoc,
  InstanceKind,
  LexiconDoc,
  NormRect,
  Point,
} from './types.js';

/** The narrow slice of the client the store needs; tests substitute fakes. */
export interface CommandTransport {
  postCommand(
    sessionId: string,
    lexiconId: string,
    envelope: CommandEnvelope,
  ): Promise<CommandResult>;
  getLexicon(sessionId: string, lexiconId: string): Promise<LexiconDoc>;
}

export interface QueuedCommand {
  draft: CommandDraft;
  provisionalId: string;
  resolve: (result: CommandResult) => void;
  reject: (error: unknown) => void;
}

export type ConflictListener = (error: ServiceError, dropped: CommandDraft[]) => void;
export type RejectListener = (error: ServiceError, draft: CommandDraft) => void;

function cloneDoc(doc: LexiconDoc): LexiconDoc {
  return JSON.parse(JSON.stringify(doc)) as LexiconDoc;
}

/**
 * Display-only local prediction of one command. Deliberately shallow: the
 * refetch after acknowledgment replaces all of this with server truth.
 */
export function predictCommand(
  doc: LexiconDoc,
  draft: CommandDraft,
  provisionalId: string,
  kindOf: (tokenId: string) => InstanceKind | undefined,
): LexiconDoc {
  const out = cloneDoc(doc);
  const args = draft.args;
  const find = (id: unknown): InstanceDoc | undefined =>
    out.instances.find((inst) => inst.instance_id === id);

  switch (draft.op) {
    case 'place_copy': {
      const rect = args.rect as NormRect;
      out.instances.push({
        instance_id: provisionalId,
        kind: kindOf(String(args.source)) ?? 'subject',
        origin: String(args.source),
        rect: { ...rect },
        position: { x: rect.x, y: rect.y },
        text: null,
        level: null,
      });
      break;
    }
    case 'create_textual': {
      const pos = args.pos as Point;
      out.instances.push({
        instance_id: provisionalId,
        kind: 'textual',
        origin: null,
        rect: null,
        position: { ...pos },
        text: String(args.text),
        level: null,
      });
      break;
    }
    case 'create_imaginative': {
      const pos = args.pos as Point;
      out.instances.push({
        instance_id: provisionalId,
        kind: 'imaginative',
        origin: null,
        rect: null,
        position: { ...pos },
        text: null,
        level: args.level as InstanceDoc['level'],
      });
      break;
    }
    case 'set_geometry': {
      const inst = find(args.instance);
      if (!inst) {
        break;
      }
      if (args.pos) {
        const pos = args.pos as Point;
        inst.position = { ...pos };
        if (inst.rect) {
          inst.rect = { ...inst.rect, x: pos.x, y: pos.y };
        }
      } else if (args.rect) {
        const rect = args.rect as NormRect;
        if (inst.kind === 'imaginative') {
          inst.level = snapLevelForArea(rect.w * rect.h);
          inst.position = { x: rect.x, y: rect.y };
        } else if (inst.kind !== 'textual') {
          inst.rect = { ...rect };
          inst.position = { x: rect.x, y: rect.y };
        }
      }
      break;
    }
    case 'set_name': {
      const id = String(args.instance);
      for (const [name, owner] of Object.entries(out.names)) {
        if (owner === id) {
          delete out.names[name];
        }
      }
      out.names[String(args.name)] = id;
      break;
    }
    case 'group':
      out.groups.push({
        group_id: provisionalId,
        members: [...(args.instances as string[])],
      });
      break;
    case 'ungroup':
      out.groups = out.groups.filter((group) => group.group_id !== args.group);
      break;
    case 'link':
      out.links.push({
        link_id: provisionalId,
        modifier: String(args.modifier),
        target: String(args.target),
      });
      break;
    case 'unlink':
      out.links = out.links.filter((link) => link.link_id !== args.link);
      break;
    case 'clear_panel':
      out.instances = [];
      out.groups = [];
      out.links = [];
      out.names = {};
      break;
    default:
      break;
  }
  return out;
}

export class PanelStore {
  private confirmed: LexiconDoc;
  private queue: QueuedCommand[] = [];
  private inFlight = false;
  private provisionalSeq = 0;
  private readonly log: CommandEnvelope[] = [];
  private readonly stateListeners = new Set<(state: LexiconDoc) => void>();
  private readonly conflictListeners = new Set<ConflictListener>();
  private readonly rejectListeners = new Set<RejectListener>();

  constructor(
    private readonly client: CommandTransport,
    readonly sessionId: string,
    readonly lexiconId: string,
    initialDoc: LexiconDoc,
    private readonly tokenKind: (tokenId: string) => InstanceKind | undefined = () => undefined,
  ) {
    this.confirmed = cloneDoc(initialDoc);
  }

  static async open(
    client: StudioClient,
    sessionId: string,
    lexiconId: string,
    tokenKind?: (tokenId: string) => InstanceKind | undefined,
  ): Promise<PanelStore> {
    const doc = await client.getLexicon(sessionId, lexiconId);
    return new PanelStore(client, sessionId, lexiconId, doc, tokenKind);
  }

  /** Last server-confirmed revision. */
  get revision(): number {
    return this.confirmed.revision;
  }

  get pendingCount(): number {
    return this.queue.length;
  }

  /** Acknowledged envelopes in acknowledgment order; replayable verbatim. */
  exportLog(): CommandEnvelope[] {
    return this.log.map((envelope) => JSON.parse(JSON.stringify(envelope)) as CommandEnvelope);
  }

  /** Confirmed document with queued predictions applied, for rendering. */
  state(): LexiconDoc {
    let doc = this.confirmed;
    for (const queued of this.queue) {
      doc = predictCommand(doc, queued.draft, queued.provisionalId, this.tokenKind);
    }
    return doc === this.confirmed ? cloneDoc(doc) : doc;
  }

  subscribe(listener: (state: LexiconDoc) => void): () => void {
    this.stateListeners.add(listener);
    return () => this.stateListeners.delete(listener);
  }

  onConflict(listener: ConflictListener): () => void {
    this.conflictListeners.add(listener);
    return () => this.conflictListeners.delete(listener);
  }

  onReject(listener: RejectListener): () => void {
    this.rejectListeners.add(listener);
    return () => this.rejectListeners.delete(listener);
  }

  /** Queue one command; resolves with the server acknowledgment. */
  submit(draft: CommandDraft): Promise<CommandResult> {
    this.provisionalSeq += 1;
    const provisionalId = `pending_${this.provisionalSeq.toString().padStart(4, '0')}`;
    return new Promise<CommandResult>((resolve, reject) => {
      this.queue.push({ draft, provisionalId, resolve, reject });
      this.emitState();
      void this.pump();
    });
  }

  /** Drop optimistic state and reload the server document. */
  async resync(): Promise<LexiconDoc> {
    this.confirmed = await this.client.getLexicon(this.sessionId, this.lexiconId);
    this.emitState();
    return this.state();
  }

  private emitState(): void {
    const snapshot = this.state();
    for (const listener of this.stateListeners) {
      listener(snapshot);
    }
  }

  private async pump(): Promise<void> {
    if (this.inFlight) {
      return;
    }
    const head = this.queue[0];
    if (!head) {
      return;
    }
    this.inFlight = true;
    const envelope: CommandEnvelope = {
      op: head.draft.op,
      args: head.draft.args,
      expected_revision: this.confirmed.revision,
    };
    try {
      const result = await this.client.postCommand(this.sessionId, this.lexiconId, envelope);
      this.log.push(JSON.parse(JSON.stringify(envelope)) as CommandEnvelope);
      this.queue.shift();
      this.confirmed = await this.client.getLexicon(this.sessionId, this.lexiconId);
      head.resolve(result);
    } catch (error) {
      if (error instanceof ServiceError && error.isRevisionConflict) {
        const dropped = this.queue.map((queued) => queued.draft);
        const waiting = this.queue;
        this.queue = [];
        this.confirmed = await this.client.getLexicon(this.sessionId, this.lexiconId);
        for (const queued of waiting) {
          queued.reject(error);
        }
        for (const listener of this.conflictListeners) {
          listener(error, dropped);
        }
      } else {
        this.queue.shift();
        head.reject(error);
        if (error instanceof ServiceError) {
          for (const listener of this.rejectListeners) {
            listener(error, head.draft);
          }
        }
      }
    } finally {
      this.inFlight = false;
      this.emitState();
      if (this.queue.length > 0) {
        void this.pump();
      }
    }
  }
}

/**
 * Replay an exported envelope log against a lexicon, verbatim. Returns the
 * acknowledged revisions; with a fresh lexicon these are 1..log.length and
 * the resulting document matches the original run revision-for-revision.
 */
export async function replayLog(
  client: CommandTransport,
  sessionId: string,
  lexiconId: string,
  log: CommandEnvelope[],
): Promise<number[]> {
  const revisions: number[] = [];
  for (const envelope of log) {
    const result = await client.postCommand(sessionId, lexiconId, envelope);
    revisions.push(result.revision);
  }
  return revisions;
}
