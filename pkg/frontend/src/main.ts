/** DOM bootstrap for the wizard. Page logic lives in the pure modules;
 * this file only wires events to the store and repaints. */

import { ApiClient } from "./api.js";
import { ViewSession } from "./state.js";
import { activePage, PageId, wizardState } from "./wizard.js";
import { parseGraphText, ViewTransform, IDENTITY_TRANSFORM, zoomAt, pan } from "./graphText.js";
import { renderDraftBanner, renderGraphSvg, renderOptionList, renderStaleBadge } from "./render.js";
import { renderGuidedCardHtml, renderSuggestionCardHtml } from "./cards.js";
import { WIDGET_FORMS, WidgetName, actionFromForm } from "./widgets.js";
import { mentionCandidates, filterMentions, extractRefs } from "./chat.js";
import { sandboxedPreviewHtml } from "./sandbox.js";
import type { StageName } from "./types.js";

const PAGE_TITLES: Record<PageId, string> = {
  "learning-content": "Learning Content",
  scenario: "Scenario",
  "learning-goals": "Learning Goals",
  interactivity: "Interactivity",
};

const PAGE_STAGE: Record<PageId, StageName> = {
  "learning-content": "concept",
  scenario: "scenario",
  "learning-goals": "learning_goal",
  interactivity: "ui_graph",
};

export class WizardApp {
  private page: PageId = "learning-content";
  private transform: ViewTransform = IDENTITY_TRANSFORM;

  constructor(
    private readonly root: HTMLElement,
    private readonly store: ViewSession,
  ) {
    store.subscribe(() => this.paint());
  }

  async boot(): Promise<void> {
    await this.store.start();
    this.paint();
  }

  private paint(): void {
    const envelope = this.store.envelope;
    if (!envelope) return;
    const states = wizardState(envelope);
    if (!states.find((s) => s.page === this.page)?.enabled) {
      this.page = activePage(envelope);
    }
    const tabs = states
      .map((state) => {
        const active = state.page === this.page ? " active" : "";
        const disabled = state.enabled ? "" : ` disabled title="${state.disabledReason ?? ""}"`;
        return (
          `<button class="tab${active}" data-page="${state.page}"${disabled}>` +
          `${PAGE_TITLES[state.page]}${renderStaleBadge(state.staleBadge)}</button>`
        );
      })
      .join("");
    this.root.innerHTML = `<nav class="tabs">${tabs}</nav><main id="page"></main>`;
    this.root.querySelectorAll<HTMLButtonElement>(".tab:not([disabled])").forEach((tab) => {
      tab.addEventListener("click", () => {
        this.page = tab.dataset.page as PageId;
        void this.loadPage();
      });
    });
    void this.loadPage();
  }

  private async loadPage(): Promise<void> {
    const main = this.root.querySelector<HTMLElement>("#page");
    const envelope = this.store.envelope;
    if (!main || !envelope) return;
    const stage = PAGE_STAGE[this.page];
    const view = this.store.stages.get(stage) ?? (await this.loadStage(stage));
    const graphPane = view?.content
      ? renderGraphSvg(parseGraphText(view.content), this.transform)
      : "<p class='empty'>Nothing here yet.</p>";

    if (this.page === "learning-content") {
      main.innerHTML =
        `<section class="split"><div><textarea id="content" rows="12" placeholder="Paste the learning content"></textarea>` +
        `<button id="submit">Generate Concept Graph</button></div>` +
        `<div class="graph-pane">${renderDraftBanner(view?.status ?? "empty")}${graphPane}${this.widgetFormsHtml()}</div></section>`;
      main.querySelector("#submit")?.addEventListener("click", () => {
        const text = (main.querySelector("#content") as HTMLTextAreaElement).value;
        void this.store.submitContent(text);
      });
    } else if (this.page === "scenario" || this.page === "learning-goals") {
      const listing =
        this.page === "scenario"
          ? await this.store.api.listScenarios(envelope.sessionId)
          : await this.store.api.listGoals(envelope.sessionId);
      main.innerHTML =
        `<section class="split"><div class="options">${renderOptionList(listing.options, null)}</div>` +
        `<div class="graph-pane">${renderDraftBanner(view?.status ?? "empty")}${graphPane}${this.widgetFormsHtml()}</div></section>`;
      main.querySelectorAll<HTMLButtonElement>(".option").forEach((button) => {
        button.addEventListener("click", () => {
          const option = listing.options.find((o) => o.title === button.dataset.title);
          if (!option) return;
          if (this.page === "scenario") void this.store.chooseScenario(option);
          else void this.store.chooseGoal(option);
        });
      });
    } else {
      const code = this.store.stages.get("code") ?? (await this.loadStage("code"));
      const preview = code?.content ? sandboxedPreviewHtml(code.content) : "<p class='empty'>Generate first.</p>";
      main.innerHTML =
        `<section class="split"><div class="sim-pane">${preview}` +
        `<button id="generate">Generate Simulation</button><button id="run-tests">Run Tests</button></div>` +
        `<div class="graph-pane">${graphPane}</div>` +
        `<div class="chat-pane"><div id="chat-items"></div>` +
        `<input id="chat-input" placeholder='Describe the problem; type "@" to reference nodes'>` +
        `<ul id="mentions" hidden></ul><button id="send">Send</button></div></section>`;
      this.wireInteractivity(main);
    }
    this.wireGraphControls(main, stage);
  }

  private async loadStage(stage: StageName) {
    const envelope = this.store.envelope;
    if (!envelope) return undefined;
    if (envelope.stageStatuses[stage] === "empty") return undefined;
    const view = await this.store.api.getStage(envelope.sessionId, stage);
    this.store.stages.set(stage, view);
    return view;
  }

  private widgetFormsHtml(): string {
    const buttons = (Object.keys(WIDGET_FORMS) as WidgetName[])
      .map((name) => `<button class="widget-open" data-widget="${name}">${WIDGET_FORMS[name].title}</button>`)
      .join("");
    return `<div class="widget-bar">${buttons}</div><form id="widget-form" hidden></form>`;
  }

  private wireGraphControls(main: HTMLElement, stage: StageName): void {
    main.querySelector(".commit")?.addEventListener("click", () => void this.store.commit(stage));
    main.querySelector(".discard")?.addEventListener("click", () => void this.store.discard(stage));
    main.querySelectorAll<HTMLButtonElement>(".widget-open").forEach((button) => {
      button.addEventListener("click", () => this.openWidgetForm(main, stage, button.dataset.widget as WidgetName));
    });
    const pane = main.querySelector<HTMLElement>(".graph-pane");
    pane?.addEventListener("wheel", (event) => {
      event.preventDefault();
      this.transform = zoomAt(this.transform, event.deltaY < 0 ? 1.15 : 0.87, event.offsetX, event.offsetY);
      void this.loadPage();
    });
    pane?.addEventListener("pointermove", (event) => {
      if (event.buttons === 1) {
        this.transform = pan(this.transform, event.movementX, event.movementY);
      }
    });
  }

  private openWidgetForm(main: HTMLElement, stage: StageName, widget: WidgetName): void {
    const form = main.querySelector<HTMLFormElement>("#widget-form");
    if (!form) return;
    const spec = WIDGET_FORMS[widget];
    form.hidden = false;
    form.innerHTML =
      spec.fields
        .map((f) => `<label>${f.label}<input name="${f.name}" value=""></label>`)
        .join("") + `<button type="submit">${spec.title}</button><p class="form-error"></p>`;
    form.onsubmit = (event) => {
      event.preventDefault();
      const values: Record<string, string> = {};
      new FormData(form).forEach((value, key) => {
        values[key] = String(value);
      });
      try {
        const action = actionFromForm(widget, values);
        void this.store.applyWidget(stage, action).catch((error) => {
          form.querySelector(".form-error")!.textContent = String(error);
        });
      } catch (error) {
        form.querySelector(".form-error")!.textContent = String(error);
      }
    };
  }

  private wireInteractivity(main: HTMLElement): void {
    main.querySelector("#generate")?.addEventListener("click", () => void this.store.generate());
    main.querySelector("#run-tests")?.addEventListener("click", () => void this.store.runTests());

    const input = main.querySelector<HTMLInputElement>("#chat-input");
    const mentions = main.querySelector<HTMLUListElement>("#mentions");
    const uiGraph = this.store.stages.get("ui_graph");
    const candidates = mentionCandidates(uiGraph?.content ?? "", this.store.annotationLabels);
    input?.addEventListener("input", () => {
      const at = input.value.lastIndexOf("@");
      if (at < 0 || !mentions) {
        if (mentions) mentions.hidden = true;
        return;
      }
      const filtered = filterMentions(candidates, input.value.slice(at + 1));
      mentions.innerHTML = filtered.map((c) => `<li data-value="${c.value}">${c.display}</li>`).join("");
      mentions.hidden = filtered.length === 0;
      mentions.querySelectorAll("li").forEach((item) => {
        item.addEventListener("click", () => {
          input.value = input.value.slice(0, at + 1) + item.dataset.value + " ";
          mentions.hidden = true;
          input.focus();
        });
      });
    });
    main.querySelector("#send")?.addEventListener("click", () => {
      if (!input?.value.trim()) return;
      const refs = extractRefs(input.value, candidates);
      void this.store.sendComplaint(input.value, refs).then(() => this.paintChat(main));
      input.value = "";
    });
    this.paintChat(main);
  }

  private paintChat(main: HTMLElement): void {
    const container = main.querySelector<HTMLElement>("#chat-items");
    if (!container) return;
    container.innerHTML = this.store.chatItems
      .map((item) => {
        switch (item.kind) {
          case "userText":
            return `<div class="chat user">${item.text}</div>`;
          case "systemNote":
            return `<div class="chat note">${item.text}</div>`;
          case "suggestionCard":
            return renderSuggestionCardHtml(item.record);
          case "guidedTestCard":
            return renderGuidedCardHtml(item.testCase);
        }
      })
      .join("\n");
  }
}

export function boot(): void {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  const api = new ApiClient(localStorage.getItem("simforge-api") ?? "http://127.0.0.1:8000");
  const app = new WizardApp(root, new ViewSession(api));
  void app.boot();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  boot();
}
