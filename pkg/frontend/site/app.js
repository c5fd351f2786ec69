/**
 * Browser view: renders the task queue as cards, a progress/mislabel
 * dashboard, the connectivity banner and the keyword-flag form.
 */
function el(tag, className, text) {
    const node = document.createElement(tag);
    if (className)
        node.className = className;
    if (text !== undefined)
        node.textContent = text;
    return node;
}
export class DomView {
    constructor(root) {
        this.root = root;
        root.innerHTML = `
      <div id="banner" class="banner" hidden></div>
      <nav>
        <button id="queue-clusters">Cluster queue</button>
        <button id="queue-keywords">Keyword queue</button>
        <button id="dashboard-btn">Dashboard</button>
        <button id="recompile-btn">Recompile</button>
      </nav>
      <section id="queue"></section>
      <section id="dashboard"></section>
      <form id="flag-form" hidden>
        <input id="flag-service" placeholder="service name" required />
        <input id="flag-category" placeholder="category (optional)" />
        <label><input id="flag-exclude" type="checkbox" /> exclude</label>
        <button type="submit">Flag</button>
      </form>
      <p class="help">Shortcuts: 1 Creation · 2 Verification · 3 Activity ·
        4 Update · 5 Recovery · s Skip</p>
    `;
    }
    attach(controller) {
        this.controller = controller;
        this.byId("queue-clusters").onclick = () => controller.loadQueue("cluster_label");
        this.byId("queue-keywords").onclick = () => controller.loadQueue("keyword_flag");
        this.byId("dashboard-btn").onclick = () => controller.refreshDashboard();
        this.byId("recompile-btn").onclick = () => controller.recompile();
        document.addEventListener("keydown", (ev) => {
            if (ev.target?.tagName === "INPUT")
                return;
            controller.handleKey(ev.key);
        });
        const form = this.byId("flag-form");
        form.onsubmit = (ev) => {
            ev.preventDefault();
            const service = this.byId("flag-service").value;
            const category = this.byId("flag-category").value || undefined;
            const exclude = this.byId("flag-exclude").checked;
            controller.submitFlag(service, category, exclude || undefined);
        };
    }
    renderQueue(tasks, current) {
        const queue = this.byId("queue");
        queue.innerHTML = "";
        tasks.slice(current).forEach((task, i) => {
            const card = el("article", i === 0 ? "card current" : "card");
            card.append(el("h3", undefined, `${task.kind} · ${task.payload_id}`));
            const context = task.context;
            if (context.exemplar) {
                card.append(el("p", "exemplar", String(context.exemplar)));
            }
            if (context.gram) {
                card.append(el("p", "gram", `${context.gram} (freq ${context.frequency ?? "?"})`));
            }
            if (context.member_count !== undefined) {
                card.append(el("p", "count", `${context.member_count} messages`));
            }
            queue.append(card);
        });
        const keywordMode = tasks[current]?.kind === "keyword_flag";
        this.byId("flag-form").hidden = !keywordMode;
    }
    renderDashboard(progress, mislabels) {
        const dash = this.byId("dashboard");
        dash.innerHTML = "";
        dash.append(el("p", "progress", `done ${progress.done} · skipped ${progress.skipped} · ` +
            `pending ${progress.pending} (v${progress.version})`), el("p", "accuracy", `accuracy ${(mislabels.accuracy * 100).toFixed(2)}% · ` +
            `${mislabels.false_negatives}/${mislabels.errors} errors are misses`));
        const grams = el("ul", "offending");
        for (const gram of mislabels.offending_grams) {
            const item = el("li");
            const link = el("a", undefined, gram);
            link.href = "#";
            link.onclick = (ev) => {
                ev.preventDefault();
                this.controller.openGram(gram);
            };
            item.append(link);
            grams.append(item);
        }
        dash.append(grams);
    }
    prefillFlagForm(gram) {
        const form = this.byId("flag-form");
        form.hidden = false;
        this.byId("flag-service").value = "";
        this.byId("flag-service").placeholder =
            `service for "${gram}"`;
    }
    showBanner(message) {
        const banner = this.byId("banner");
        banner.textContent = message;
        banner.hidden = false;
    }
    clearBanner() {
        this.byId("banner").hidden = true;
    }
    showStalePrompt() {
        this.showBanner("your view is stale — the server has newer state; reload the queue");
    }
    byId(id) {
        const node = this.root.querySelector(`#${id}`);
        if (!node)
            throw new Error(`missing element #${id}`);
        return node;
    }
}
