/**
 * Wire types shared with the lexcraft HTTP service.
 *
 * These mirror the JSON documents the server emits; the UI never derives
 * semantics of its own from them beyond display geometry.
 */

export type TokenKind = 'subject' | 'color' | 'style' | 'concept';

export type InstanceKind = 'subject' | 'color' | 'style' | 'textual' | 'imaginative';

export type ImaginationLevel = 'small' | 'medium' | 'large';

/** Normalized rectangle inside the unit square. */
export interface NormRect {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface Point {
  x: number;
  y: number;
}

/** One mood-board source token, as listed by GET /sessions/{s}/tokens. */
export interface SourceTokenDoc {
  token_id: string;
  kind: TokenKind;
  created_at: number;
  image_id?: string;
  bbox?: NormRect;
  rgb?: string;
  origin?: string;
  keywords?: string[];
  mask_png_b64?: string;
  thumbnail_png_b64?: string;
  style_thumbnail_png_b64?: string;
}

/** One placed token instance inside a lexicon document. */
export interface InstanceDoc {
  instance_id: string;
  kind: InstanceKind;
  origin: string | null;
  rect: NormRect | null;
  position: Point | null;
  text: string | null;
  level: ImaginationLevel | null;
}

export interface GroupDoc {
  group_id: string;
  members: string[];
}

export interface LinkDoc {
  link_id: string;
  modifier: string;
  target: string;
}

/** The full lexicon document returned by the server. */
export interface LexiconDoc {
  lexicon_id: string;
  revision: number;
  parent_entry_id: string | null;
  instances: InstanceDoc[];
  groups: GroupDoc[];
  links: LinkDoc[];
  names: Record<string, string>;
}

/** One wire command; expected_revision is the optimistic concurrency guard. */
export interface CommandEnvelope {
  op: string;
  args: Record<string, unknown>;
  expected_revision: number;
}

/** A command before the queue assigns its expected_revision. */
export interface CommandDraft {
  op: string;
  args: Record<string, unknown>;
}

export interface CommandResult {
  revision: number;
  instance_id?: string;
  group_id?: string;
  link_id?: string;
}

export interface Diagnostic {
  code: string;
  message: string;
  ids: string[];
}

export interface ImageRefDoc {
  image_id: string;
  width: number;
  height: number;
  content_hash: string;
}

export interface ArtifactStageRef {
  stage: string;
  url: string;
}

export interface ArtifactRef {
  id: string;
  stages: ArtifactStageRef[];
  final: string;
  manifest: string;
}

export interface GenerateResult {
  entry_id: string;
  revision: number;
  plan_hash: string;
  artifact: ArtifactRef;
}

export interface HistoryEntrySummary {
  entry_id: string;
  parent_id: string | null;
  created_at: number;
  plan_hash: string;
  revision: number;
  lexicon_id: string;
  artifact: {
    id: string;
    final: string;
    manifest: string;
  };
}

/** Error body the service returns for every failure. */
export interface ServiceErrorBody {
  code: string;
  message: string;
  details: Record<string, unknown>;
}
