import { describe, expect, it } from 'vitest';

import { ServiceError } from '../src/api.js';
import { clearPanel, createTextual, dropSourceToken, rename } from '../src/gestures.js';
import { PanelStore, predictCommand } from '../src/store.js';
import type { CommandDraft, LexiconDoc } from '../src/types.js';
import { FakeService, blankDoc, settle } from './fakeClient.js';

function makeStore(service: FakeService): PanelStore {
  return new PanelStore(service, 'ses_test', 'lex_0001', blankDoc());
}

const place = (): CommandDraft => dropSourceToken('tok_0001', { x: 0.1, y: 0.1, w: 0.2, h: 0.2 });

describe('optimistic state', () => {
  it('shows a queued command immediately and reconciles on acknowledgment', async () => {
    const service = new FakeService();
    const store = makeStore(service);

    const done = store.submit(place());
    expect(store.pendingCount).toBe(1);
    const optimistic = store.state();
    expect(optimistic.instances).toHaveLength(1);
    expect(optimistic.instances[0]!.instance_id).toMatch(/^pending_/);
    expect(optimistic.revision).toBe(0);

    const result = await done;
    await settle();
    expect(result.revision).toBe(1);
    expect(result.instance_id).toBe('ins_0001');
    expect(store.pendingCount).toBe(0);
    expect(store.revision).toBe(1);
    const confirmed = store.state();
    expect(confirmed.instances.map((i) => i.instance_id)).toEqual(['ins_0001']);
  });

  it('never mutates the confirmed document through state()', async () => {
    const service = new FakeService();
    const store = makeStore(service);
    await store.submit(place());
    await settle();
    const snapshot = store.state();
    snapshot.instances.pop();
    snapshot.names.sneaky = 'ins_0001';
    expect(store.state().instances).toHaveLength(1);
    expect(store.state().names).toEqual({});
  });

  it('notifies subscribers on queue and confirmation changes', async () => {
    const service = new FakeService();
    const store = makeStore(service);
    const revisions: number[] = [];
    store.subscribe((state) => revisions.push(state.revision));
    await store.submit(place());
    await settle();
    expect(revisions[0]).toBe(0);
    expect(revisions[revisions.length - 1]).toBe(1);
  });
});

describe('envelope log', () => {
  it('records acknowledged envelopes with their dispatched expected_revision', async () => {
    const service = new FakeService();
    const store = makeStore(service);
    await store.submit(place());
    await store.submit(createTextual('calm scene', { x: 0.5, y: 0.1 }));
    await store.submit(rename('ins_0001', 'hero'));
    await settle();

    const log = store.exportLog();
    expect(log.map((e) => e.op)).toEqual(['place_copy', 'create_textual', 'set_name']);
    expect(log.map((e) => e.expected_revision)).toEqual([0, 1, 2]);
  });

  it('excludes rejected commands from the log', async () => {
    const service = new FakeService();
    const store = makeStore(service);
    await store.submit(place());
    service.failNext = { status: 422, code: 'ValidationFailed', message: 'bad rect' };
    await expect(store.submit(place())).rejects.toMatchObject({ code: 'ValidationFailed' });
    await store.submit(createTextual('after failure', { x: 0, y: 0 }));
    await settle();
    expect(store.exportLog().map((e) => e.op)).toEqual(['place_copy', 'create_textual']);
    expect(store.exportLog().map((e) => e.expected_revision)).toEqual([0, 1]);
  });
});

describe('failure handling', () => {
  it('drops the whole queue and resyncs on a revision conflict', async () => {
    const service = new FakeService();
    const store = makeStore(service);
    await store.submit(place());
    await settle();

    const externalId = service.bumpExternally();
    const conflicts: CommandDraft[][] = [];
    store.onConflict((_error, dropped) => conflicts.push(dropped));

    service.hold = true;
    const first = store.submit(createTextual('doomed', { x: 0, y: 0 }));
    const second = store.submit(rename('ins_0001', 'alsoDoomed'));
    await settle();
    service.hold = false;
    service.release();

    await expect(first).rejects.toMatchObject({ code: 'RevisionConflict' });
    await expect(second).rejects.toMatchObject({ code: 'RevisionConflict' });
    await settle();

    expect(store.pendingCount).toBe(0);
    expect(conflicts).toHaveLength(1);
    expect(conflicts[0]!.map((d) => d.op)).toEqual(['create_textual', 'set_name']);
    // resynced to server truth including the competing edit
    expect(store.revision).toBe(2);
    expect(store.state().instances.map((i) => i.instance_id)).toContain(externalId);

    // the store recovers: the next command dispatches with the fresh revision
    await store.submit(rename('ins_0001', 'recovered'));
    await settle();
    expect(store.revision).toBe(3);
    expect(service.posted[service.posted.length - 1]!.expected_revision).toBe(2);
  });

  it('drops only the failing command on a non-conflict rejection', async () => {
    const service = new FakeService();
    const store = makeStore(service);
    const rejections: string[] = [];
    store.onReject((error) => rejections.push(error.code));

    service.hold = true;
    service.failNext = { status: 422, code: 'ValidationFailed', message: 'nope' };
    const bad = store.submit(createTextual('rejected', { x: 0, y: 0 }));
    const good = store.submit(place());
    await settle();
    service.hold = false;
    service.release();
    service.release();

    await expect(bad).rejects.toBeInstanceOf(ServiceError);
    await expect(good).resolves.toMatchObject({ revision: 1 });
    await settle();
    expect(rejections).toEqual(['ValidationFailed']);
    expect(store.revision).toBe(1);
    expect(store.state().instances).toHaveLength(1);
  });
});

describe('dispatch serialization', () => {
  it('keeps at most one command in flight and paces expected_revision', async () => {
    const service = new FakeService();
    const store = makeStore(service);
    service.hold = true;

    const all = Promise.all([
      store.submit(place()),
      store.submit(createTextual('two', { x: 0.2, y: 0.2 })),
      store.submit(createTextual('three', { x: 0.3, y: 0.3 })),
    ]);
    await settle();
    expect(service.posted).toHaveLength(1);
    expect(store.pendingCount).toBe(3);
    expect(store.state().instances).toHaveLength(3);

    service.release();
    await settle();
    expect(service.posted).toHaveLength(2);

    service.release();
    await settle();
    expect(service.posted).toHaveLength(3);

    service.release();
    await all;
    await settle();
    expect(service.posted.map((e) => e.expected_revision)).toEqual([0, 1, 2]);
    expect(store.revision).toBe(3);
    expect(store.pendingCount).toBe(0);
  });
});

describe('predictCommand', () => {
  const base = (): LexiconDoc => ({
    ...blankDoc(),
    instances: [
      {
        instance_id: 'ins_0001',
        kind: 'imaginative',
        origin: null,
        rect: null,
        position: { x: 0.4, y: 0.4 },
        text: null,
        level: 'medium',
      },
    ],
    names: { sparkle: 'ins_0001' },
    revision: 3,
  });

  it('snaps a rect-resize of an imaginative token to a preset level', () => {
    const out = predictCommand(
      base(),
      { op: 'set_geometry', args: { instance: 'ins_0001', rect: { x: 0.1, y: 0.2, w: 0.2, h: 0.1 } } },
      'pending_0001',
      () => undefined,
    );
    const inst = out.instances[0]!;
    expect(inst.level).toBe('large');
    expect(inst.rect).toBeNull();
    expect(inst.position).toEqual({ x: 0.1, y: 0.2 });
  });

  it('frees the previous name when renaming', () => {
    const out = predictCommand(
      base(),
      { op: 'set_name', args: { instance: 'ins_0001', name: 'glow' } },
      'pending_0001',
      () => undefined,
    );
    expect(out.names).toEqual({ glow: 'ins_0001' });
  });

  it('clears every collection on clear_panel', () => {
    const doc = base();
    doc.groups.push({ group_id: 'grp_0001', members: ['ins_0001'] });
    doc.links.push({ link_id: 'lnk_0001', modifier: 'ins_0001', target: 'ins_0001' });
    const out = predictCommand(doc, { op: 'clear_panel', args: {} }, 'pending_0001', () => undefined);
    expect(out.instances).toEqual([]);
    expect(out.groups).toEqual([]);
    expect(out.links).toEqual([]);
    expect(out.names).toEqual({});
  });
});
