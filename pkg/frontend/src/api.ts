/**
 * Typed client for the lexcraft HTTP service.
 *
 * Every method is one request; the store layers queuing and optimism on
 * top. Server failures become {@link ServiceError}s carrying the wire code
 * so callers can branch on RevisionConflict vs ValidationFailed.
 */

import type {
  CommandEnvelope,
  CommandResult,
  Diagnostic,
  GenerateResult,
  HistoryEntrySummary,
  ImageRefDoc,
  LexiconDoc,
  ServiceErrorBody,
  SourceTokenDoc,
} from './types.js';

export class ServiceError extends Error {
  readonly code: string;
  readonly status: number;
  readonly details: Record<string, unknown>;

  constructor(status: number, body: ServiceErrorBody) {
    super(body.message);
    this.name = 'ServiceError';
    this.code = body.code;
    this.status = status;
    this.details = body.details ?? {};
  }

  get isRevisionConflict(): boolean {
    return this.code === 'RevisionConflict';
  }
}

async function parseJson<T>(response: Response): Promise<T> {
  if (response.ok) {
    return (await response.json()) as T;
  }
  let body: ServiceErrorBody;
  try {
    body = (await response.json()) as ServiceErrorBody;
  } catch {
    body = { code: 'TransportError', message: `HTTP ${response.status}`, details: {} };
  }
  throw new ServiceError(response.status, body);
}

export interface TokenRequest {
  kind: string;
  args: Record<string, unknown>;
}

export class StudioClient {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  private async post<T>(path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.url(path), {
      method: 'POST',
      headers: body === undefined ? {} : { 'content-type': 'application/json' },
      body: body === undefined ? null : JSON.stringify(body),
    });
    return parseJson<T>(response);
  }

  private async get<T>(path: string): Promise<T> {
    return parseJson<T>(await fetch(this.url(path)));
  }

  async health(): Promise<boolean> {
    try {
      const body = await this.get<{ status: string }>('/healthz');
      return body.status === 'ok';
    } catch {
      return false;
    }
  }

  async createSession(): Promise<string> {
    const body = await this.post<{ session_id: string }>('/sessions');
    return body.session_id;
  }

  async uploadImage(sessionId: string, png: Uint8Array): Promise<ImageRefDoc> {
    const response = await fetch(this.url(`/sessions/${sessionId}/images`), {
      method: 'POST',
      headers: { 'content-type': 'application/octet-stream' },
      body: png as BodyInit,
    });
    return parseJson<ImageRefDoc>(response);
  }

  async createTokens(sessionId: string, request: TokenRequest): Promise<SourceTokenDoc[]> {
    const body = await this.post<{ tokens: SourceTokenDoc[] }>(
      `/sessions/${sessionId}/tokens`,
      request,
    );
    return body.tokens;
  }

  async listTokens(sessionId: string): Promise<SourceTokenDoc[]> {
    const body = await this.get<{ tokens: SourceTokenDoc[] }>(`/sessions/${sessionId}/tokens`);
    return body.tokens;
  }

  async createLexicon(sessionId: string): Promise<{ lexicon_id: string; revision: number }> {
    return this.post(`/sessions/${sessionId}/lexicons`);
  }

  async getLexicon(sessionId: string, lexiconId: string): Promise<LexiconDoc> {
    return this.get(`/sessions/${sessionId}/lexicons/${lexiconId}`);
  }

  async postCommand(
    sessionId: string,
    lexiconId: string,
    envelope: CommandEnvelope,
  ): Promise<CommandResult> {
    return this.post(`/sessions/${sessionId}/lexicons/${lexiconId}/commands`, envelope);
  }

  async validate(sessionId: string, lexiconId: string): Promise<Diagnostic[]> {
    const body = await this.post<{ diagnostics: Diagnostic[] }>(
      `/sessions/${sessionId}/lexicons/${lexiconId}/validate`,
    );
    return body.diagnostics;
  }

  async generate(
    sessionId: string,
    lexiconId: string,
    options: { canvas?: [number, number]; seed?: number; strict?: boolean } = {},
  ): Promise<GenerateResult> {
    return this.post(`/sessions/${sessionId}/lexicons/${lexiconId}/generate`, options);
  }

  async listHistory(sessionId: string): Promise<HistoryEntrySummary[]> {
    const body = await this.get<{ entries: HistoryEntrySummary[] }>(
      `/sessions/${sessionId}/history`,
    );
    return body.entries;
  }

  async forkEntry(
    sessionId: string,
    entryId: string,
  ): Promise<{ lexicon_id: string; revision: number }> {
    return this.post(`/sessions/${sessionId}/history/${entryId}/fork`);
  }

  async fetchBytes(path: string): Promise<Uint8Array> {
    const response = await fetch(this.url(path));
    if (!response.ok) {
      throw new ServiceError(response.status, {
        code: 'TransportError',
        message: `HTTP ${response.status} for ${path}`,
        details: {},
      });
    }
    return new Uint8Array(await response.arrayBuffer());
  }

  async fetchJson<T>(path: string): Promise<T> {
    return this.get<T>(path);
  }
}
