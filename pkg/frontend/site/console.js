/**
 * DOM-free console controller.
 *
 * Holds the task queue and routes analyst input (keyboard shortcuts,
 * flag-form submissions) to the API client. All rendering goes through the
 * injected View so the controller can be tested without a browser. Writes
 * are pessimistic: the queue only advances after the server confirms, and a
 * failed write leaves the local queue untouched.
 */
import { ConnectivityError, StaleVersionError, } from "./api.js";
/** Keyboard shortcuts 1-5 in the order the labeling guide lists them. */
export const PURPOSE_KEYS = {
    "1": "creation",
    "2": "verification",
    "3": "activity",
    "4": "update",
    "5": "recovery",
};
export class ConsoleController {
    constructor(api, view) {
        this.api = api;
        this.view = view;
        this.queue = [];
        this.current = 0;
        this.queueKind = "cluster_label";
    }
    currentTask() {
        return this.queue[this.current];
    }
    async loadQueue(kind) {
        this.queueKind = kind;
        try {
            this.queue = await this.api.tasks(kind, 50);
        }
        catch (err) {
            this.fail(err);
            return;
        }
        this.current = 0;
        this.view.clearBanner();
        this.view.renderQueue(this.queue, this.current);
    }
    /** Digits 1-5 label the current cluster task; "s" skips any task. */
    async handleKey(key) {
        const task = this.currentTask();
        if (!task)
            return;
        if (key === "s") {
            await this.resolveCurrent({ action: "skip" });
            return;
        }
        const purpose = PURPOSE_KEYS[key];
        if (purpose && task.kind === "cluster_label") {
            await this.resolveCurrent({ action: "label", purpose });
        }
    }
    /** Submit the keyword-flag form for the current keyword task. */
    async submitFlag(service, category, exclude) {
        const resolution = { action: "flag", service };
        if (category !== undefined)
            resolution.category = category;
        if (exclude !== undefined)
            resolution.exclude = exclude;
        await this.resolveCurrent(resolution);
    }
    async refreshDashboard() {
        try {
            const [progress, mislabels] = [
                await this.api.progress(),
                await this.api.mislabels(),
            ];
            this.view.clearBanner();
            this.view.renderDashboard(progress, mislabels);
        }
        catch (err) {
            this.fail(err);
        }
    }
    /** Navigate from a mislabel gram into a prefilled keyword-flag task. */
    openGram(gram) {
        this.view.prefillFlagForm(gram);
    }
    async recompile() {
        try {
            await this.api.recompile();
            this.view.clearBanner();
        }
        catch (err) {
            this.fail(err);
        }
    }
    async resolveCurrent(resolution) {
        const task = this.currentTask();
        if (!task)
            return;
        try {
            await this.api.resolve(task.id, resolution);
        }
        catch (err) {
            this.fail(err);
            return; // server refused: keep the card, mutate nothing locally
        }
        this.view.clearBanner();
        this.current += 1;
        this.view.renderQueue(this.queue, this.current);
    }
    fail(err) {
        if (err instanceof StaleVersionError) {
            this.view.showStalePrompt();
        }
        else if (err instanceof ConnectivityError) {
            this.view.showBanner("label service unreachable — retry when it is back");
        }
        else {
            this.view.showBanner(String(err));
        }
    }
}
