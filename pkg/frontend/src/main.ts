/** Application wiring: setup form, side-by-side record view, rubric
 * submission, progress and error/retry handling. */

import { ApiClient, type RecordPayload, type ScorePayload } from "./api.js";
import { buildRatingControl, type RatingControl } from "./controls.js";
import { AnnotationSession } from "./session.js";
import { defaultStore, type KeyValueStore } from "./storage.js";

const ANNOTATOR_KEY = "newsenrich.annotator";

function byId<T extends HTMLElement>(doc: Document, id: string): T {
  const element = doc.getElementById(id);
  if (!element) {
    throw new Error(`missing element #${id}`);
  }
  return element as T;
}

export class App {
  private readonly doc: Document;
  private readonly api: ApiClient;
  private readonly store: KeyValueStore;
  private session: AnnotationSession | null = null;
  private categories: string[] = [];
  private labels: string[] = [];
  private controls: RatingControl[] = [];
  private retryAction: (() => Promise<void>) | null = null;

  constructor(doc: Document, api: ApiClient, store: KeyValueStore) {
    this.doc = doc;
    this.api = api;
    this.store = store;
  }

  wireSetup(): void {
    const annotatorInput = byId<HTMLInputElement>(this.doc, "annotator-input");
    const batchInput = byId<HTMLInputElement>(this.doc, "batch-input");
    const startButton = byId<HTMLButtonElement>(this.doc, "start-button");
    const savedAnnotator = this.store.get(ANNOTATOR_KEY);
    if (savedAnnotator) {
      annotatorInput.value = savedAnnotator;
    }
    startButton.addEventListener("click", async (event) => {
      event.preventDefault();
      const annotator = annotatorInput.value.trim();
      const batchId = batchInput.value.trim();
      const setupError = byId(this.doc, "setup-error");
      if (!annotator || !batchId) {
        setupError.textContent = "Enter both an annotator id and a batch id.";
        setupError.hidden = false;
        return;
      }
      setupError.hidden = true;
      this.store.set(ANNOTATOR_KEY, annotator);
      try {
        await this.start(annotator, batchId);
      } catch (error) {
        setupError.textContent = `Could not load the batch: ${String(error)}`;
        setupError.hidden = false;
      }
    });
  }

  async start(annotatorId: string, batchId: string): Promise<void> {
    const rubric = await this.api.rubric();
    this.categories = rubric.categories;
    this.labels = rubric.labels;
    const batch = await this.api.batch(batchId);
    this.session = new AnnotationSession(
      annotatorId,
      batch,
      this.categories,
      this.store,
    );
    this.buildRubricControls();
    byId(this.doc, "setup").hidden = true;
    byId(this.doc, "screen").hidden = false;
    byId(this.doc, "batch-label").textContent = batch.batch_id;
    await this.renderCurrent();
  }

  private buildRubricControls(): void {
    const container = byId(this.doc, "categories");
    container.textContent = "";
    this.controls = this.categories.map((category) =>
      buildRatingControl(this.doc, category, this.labels, (cat, value) =>
        this.onSelect(cat, value),
      ),
    );
    for (const control of this.controls) {
      container.appendChild(control.element);
    }
  }

  private onSelect(category: string, value: number): void {
    const session = this.session;
    if (!session || !session.currentRecordId) return;
    session.select(session.currentRecordId, category, value);
    this.controls.find((c) => c.category === category)?.clearError();
    byId(this.doc, "submit-hint").hidden = true;
  }

  private updateProgress(): void {
    const session = this.session;
    if (!session) return;
    const { done, total } = session.progress();
    byId(this.doc, "progress").textContent = `${done} / ${total} completed`;
  }

  private showError(message: string, retry: () => Promise<void>): void {
    const banner = byId(this.doc, "error-banner");
    byId(this.doc, "error-message").textContent = message;
    banner.hidden = false;
    this.retryAction = retry;
  }

  private clearError(): void {
    byId(this.doc, "error-banner").hidden = true;
    this.retryAction = null;
  }

  wireRetry(): void {
    byId<HTMLButtonElement>(this.doc, "retry-button").addEventListener(
      "click",
      async () => {
        const action = this.retryAction;
        this.clearError();
        if (action) {
          await action();
        }
      },
    );
  }

  wireSubmit(): void {
    byId<HTMLButtonElement>(this.doc, "submit-button").addEventListener(
      "click",
      async (event) => {
        event.preventDefault();
        await this.submit();
      },
    );
  }

  wirePivotToggle(): void {
    const toggle = byId<HTMLButtonElement>(this.doc, "pivot-toggle");
    toggle.addEventListener("click", () => {
      const panes = byId(this.doc, "pivot-panes");
      panes.hidden = !panes.hidden;
      toggle.textContent = panes.hidden ? "Show pivot texts" : "Hide pivot texts";
    });
  }

  async renderCurrent(): Promise<void> {
    const session = this.session;
    if (!session) return;
    this.updateProgress();
    if (session.done) {
      await this.showDone();
      return;
    }
    const recordId = session.currentRecordId;
    if (!recordId) return;
    let record: RecordPayload;
    try {
      record = await this.api.record(recordId);
    } catch (error) {
      // entered scores stay in the session buffer; offer a retry
      this.showError(
        `Could not load record ${recordId}: ${String(error)}`,
        () => this.renderCurrent(),
      );
      return;
    }
    this.clearError();
    this.renderRecord(record);
  }

  renderRecord(record: RecordPayload): void {
    const session = this.session;
    byId(this.doc, "record-label").textContent = record.id;
    byId(this.doc, "source-text").textContent = record.source_text;
    byId(this.doc, "enriched-text").textContent = record.enriched_source_text;

    const hasPivot =
      record.pivot_text !== undefined || record.enriched_pivot_text !== undefined;
    const toggle = byId<HTMLButtonElement>(this.doc, "pivot-toggle");
    toggle.disabled = !hasPivot;
    byId(this.doc, "pivot-text").textContent = record.pivot_text ?? "";
    byId(this.doc, "enriched-pivot-text").textContent =
      record.enriched_pivot_text ?? "";
    byId(this.doc, "pivot-panes").hidden = true;
    toggle.textContent = "Show pivot texts";

    for (const control of this.controls) {
      control.clear();
    }
    byId(this.doc, "submit-hint").hidden = true;
    if (session) {
      const buffered = session.selections(record.id);
      for (const control of this.controls) {
        const value = buffered[control.category];
        if (value !== undefined) {
          control.setValue(value);
        }
      }
    }
  }

  async submit(): Promise<void> {
    const session = this.session;
    if (!session) return;
    const recordId = session.currentRecordId;
    if (!recordId) return;

    const missing = session.missingCategories(recordId);
    if (missing.length > 0) {
      for (const control of this.controls) {
        if (missing.includes(control.category)) {
          control.showError("Select a rating for this category.");
        }
      }
      const hint = byId(this.doc, "submit-hint");
      hint.textContent = `Rate every category before submitting (missing: ${missing.join(", ")}).`;
      hint.hidden = false;
      return;
    }

    const selections = session.selections(recordId);
    const payload: ScorePayload = {
      record_id: recordId,
      annotator_id: session.annotatorId,
      coherency: selections["coherency"] ?? 0,
      enrichment: selections["enrichment"] ?? 0,
      relevancy: selections["relevancy"] ?? 0,
      readability: selections["readability"] ?? 0,
    };

    try {
      const result = await this.api.submitScore(payload);
      if (!result.ok) {
        const control = this.controls.find((c) => c.category === result.field);
        if (control) {
          control.showError(result.reason);
        } else {
          this.showError(
            `The service rejected the score (${result.field}): ${result.reason}`,
            () => this.submit(),
          );
        }
        return;
      }
    } catch (error) {
      // buffered selections survive; the annotator can retry safely
      this.showError(
        `Could not submit the score: ${String(error)}`,
        () => this.submit(),
      );
      return;
    }
    this.clearError();
    session.markCompleted(recordId);
    await this.renderCurrent();
  }

  private async showDone(): Promise<void> {
    const session = this.session;
    if (!session) return;
    byId(this.doc, "annotate-area").hidden = true;
    const done = byId(this.doc, "done");
    done.hidden = false;
    try {
      const report = await this.api.report(session.batchId);
      const parts = this.categories
        .map((category) => `${category}: ${String(report[category])}`)
        .join(" · ");
      byId(this.doc, "report-summary").textContent =
        `${report.score_count} scores — ${parts}`;
    } catch {
      byId(this.doc, "report-summary").textContent =
        "Batch complete. (Report not available yet.)";
    }
  }
}

export function boot(doc: Document, api: ApiClient, store: KeyValueStore): App {
  const app = new App(doc, api, store);
  app.wireSetup();
  app.wireSubmit();
  app.wireRetry();
  app.wirePivotToggle();
  return app;
}

declare global {
  interface Window {
    __NEWSENRICH_TEST__?: boolean;
  }
}

if (typeof window !== "undefined" && !window.__NEWSENRICH_TEST__) {
  boot(document, new ApiClient(""), defaultStore());
}
