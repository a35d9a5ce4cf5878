//! Regenerates the bundled corpus under `corpus/` (or the directory given as
//! the first argument).
//!
//! ```text
//! cargo run -p changehound --example gen_corpus
//! ```

use std::path::{Path, PathBuf};

use changehound::builder::ModelBuilder;
use changehound::catgen::EventDescriptor;
use changehound::corpus::{ChangeType, CorpusEntry, FaultNote};
use changehound::impact::{build_combined_map, compute_change_impact, ChangeSet};
use changehound::model::{
    validate_app_model, ActionKind, AppModel, Effect, ElementKind, FaultKind, Guard,
};
use changehound::runner::Guidance;

/// Thin wrapper that lets helpers thread the consuming builder.
struct Gen {
    b: ModelBuilder,
    pkg: String,
}

fn camel(tag: &str) -> String {
    tag.split('_')
        .map(|w| {
            let mut c = w.chars();
            match c.next() {
                Some(f) => f.to_uppercase().chain(c).collect(),
                None => String::new(),
            }
        })
        .collect()
}

/// `ProtectedFolderActivity` -> `activity_protected_folder`,
/// `Units01Activity` -> `activity_units_0_1`.
fn layout_name(activity: &str) -> String {
    let stem = activity.strip_suffix("Activity").unwrap_or(activity);
    let mut out = String::from("activity");
    for c in stem.chars() {
        if c.is_uppercase() || c.is_ascii_digit() {
            out.push('_');
        }
        out.extend(c.to_lowercase());
    }
    out
}

impl Gen {
    fn new(name: &str, pkg: &str) -> Self {
        Gen {
            b: ModelBuilder::new(name),
            pkg: pkg.to_owned(),
        }
    }

    fn with(&mut self, f: impl FnOnce(ModelBuilder) -> ModelBuilder) {
        let b = std::mem::take(&mut self.b);
        self.b = f(b);
    }

    fn screen(&mut self, activity: &str, elements: Vec<String>, is_start: bool) {
        let layout = layout_name(activity);
        self.with(|b| {
            b.activity(activity, &layout, is_start)
                .layout_owned(&layout, elements)
        });
    }

    fn nav(&mut self, id: &str, activity: &str) -> String {
        self.with(|b| b.button(id).goto(id, activity));
        id.to_owned()
    }

    fn button(&mut self, id: &str) -> String {
        self.with(|b| b.button(id));
        id.to_owned()
    }

    fn listening(&mut self, id: &str, class: &str, method: &str) -> String {
        let sig = format!("{}.{class}.{method}", self.pkg);
        self.with(|b| b.button_with_listener(id, &sig));
        id.to_owned()
    }

    fn pop(&mut self, id: &str) -> String {
        self.with(|b| {
            b.button(id)
                .rule(id, ActionKind::Click, None, vec![Effect::PopBack])
        });
        id.to_owned()
    }

    fn edit(&mut self, id: &str, key: &str) -> String {
        self.with(|b| b.edit_field(id, key));
        id.to_owned()
    }

    /// A chain of calls `sigs[0] -> sigs[1] -> ...`, package-qualified.
    fn chain(&mut self, sigs: &[&str]) {
        let full: Vec<String> = sigs.iter().map(|s| format!("{}.{s}", self.pkg)).collect();
        for w in full.windows(2) {
            self.with(|b| b.call(&w[0], &w[1]));
        }
    }

    /// A screen with `fanout` links to child screens (`depth` levels deep)
    /// and `leaves` plain options. Returns the activity id.
    fn tree(&mut self, tag: &str, depth: usize, fanout: usize, leaves: usize) -> String {
        let activity = format!("{}Activity", camel(tag));
        let mut elements = Vec::new();
        if depth > 0 {
            for i in 0..fanout {
                let child = self.tree(&format!("{tag}_{i}"), depth - 1, fanout, leaves);
                elements.push(self.nav(&format!("{tag}_open{i}"), &child));
            }
        }
        for j in 0..leaves {
            let id = format!("{tag}_opt{j}");
            if j == 0 {
                elements.push(self.listening(
                    &id,
                    &format!("ui.{}Fragment", camel(tag)),
                    "onOptionSelected(MenuItem)",
                ));
            } else {
                elements.push(self.button(&id));
            }
        }
        self.screen(&activity, elements, false);
        activity
    }

    /// Link button plus the subtree behind it.
    fn branch(&mut self, tag: &str, depth: usize, fanout: usize, leaves: usize) -> String {
        let activity = self.tree(tag, depth, fanout, leaves);
        self.nav(tag, &activity)
    }

    fn build(self) -> AppModel {
        self.b.build()
    }
}

struct App {
    model: AppModel,
    changes: ChangeSet,
    change_type: ChangeType,
    guidance: Option<Guidance>,
}

fn functions(sigs: &[&str]) -> Vec<changehound::model::FunctionRef> {
    sigs.iter().map(|s| (*s).into()).collect()
}

fn strings(ids: &[&str]) -> Vec<String> {
    ids.iter().map(|s| s.to_string()).collect()
}

fn amaze_like() -> App {
    let mut g = Gen::new("amaze_like", "filemanager");
    let mut files = Vec::new();
    for i in 0..4 {
        let viewer = g.tree(&format!("file{i}_view"), 1, 2, 2);
        let id = format!("file_{i}");
        g.with(|b| {
            b.widget(
                &id,
                ElementKind::ListItem,
                &[ActionKind::Click, ActionKind::LongClick],
            )
            .goto(&id, &viewer)
            .rule(
                &id,
                ActionKind::LongClick,
                None,
                vec![
                    Effect::SetFlag {
                        flag: "selecting".into(),
                        value: true,
                    },
                    Effect::Inflate("selection_menu".into()),
                ],
            )
        });
        files.push(id);
    }
    files.push(g.branch("sort", 1, 2, 3));
    files.push(g.branch("search", 1, 3, 2));

    let mut menu = vec![g.branch("copy", 1, 3, 2), g.branch("cut", 1, 3, 2)];
    let confirm = g.tree("delete_confirm", 0, 0, 2);
    menu.push(g.nav("delete", &confirm));
    menu.push(g.branch("rename", 1, 2, 2));
    menu.push(g.branch("share", 1, 3, 2));
    let dialog_ok = g.pop("compress_ok");
    let dialog_cancel = g.pop("compress_cancel");
    g.screen("CompressDialog", vec![dialog_ok, dialog_cancel], false);
    g.with(|b| {
        b.widget("compress", ElementKind::MenuItem, &[ActionKind::Click])
            .listener(
                "compress",
                ActionKind::Click,
                "filemanager.MainActivityHelper.compressFiles(List)",
            )
            .goto("compress", "CompressDialog")
            .layout_owned("selection_menu", {
                let mut m = menu.clone();
                m.push("compress".into());
                m
            })
            .flag("selecting")
    });
    g.chain(&[
        "MainActivityHelper.compressFiles(List)",
        "asynchronous.ZipService.compressFiles(List)",
        "asynchronous.ZipService.addFileToZip(File,String)",
    ]);
    g.screen("MainFragment", files, false);
    g.with(|b| b.inflatable("MainFragment", "selection_menu"));

    let tab = g.nav("tab_files", "MainFragment");
    let drawer = g.branch("drawer", 2, 3, 2);
    let cloud = g.branch("cloud", 1, 3, 2);
    let settings = g.branch("preferences", 2, 2, 3);
    g.screen("MainActivity", vec![tab, drawer, cloud, settings], true);

    App {
        model: g.build(),
        changes: ChangeSet::new(
            functions(&["filemanager.asynchronous.ZipService.compressFiles(List)"]),
            vec![],
            vec![],
        )
        .unwrap(),
        change_type: ChangeType::ChangedFunctions,
        guidance: None,
    }
}

fn beecount_like() -> App {
    let mut g = Gen::new("beecount_like", "beecount");
    let counting = g.tree("counting", 1, 3, 3);
    let menu = g.button("menu");
    let add = g.branch("add_count", 1, 3, 2);
    let remove = g.branch("remove_count", 1, 2, 2);
    let name = g.edit("project_name", "project_name");
    g.with(|b| {
        b.button_with_listener("save_project", "beecount.NewProjectActivity.saveData(View)")
            .rule(
                "save_project",
                ActionKind::Click,
                None,
                vec![
                    Effect::ClearValue("project_name".into()),
                    Effect::GotoActivity(counting.clone()),
                ],
            )
            .rule(
                "menu",
                ActionKind::Click,
                None,
                vec![Effect::RevealFault("bc_state_loss".into())],
            )
            .fault(
                "bc_state_loss",
                FaultKind::StateLossFault,
                false,
                "opening the menu after typing a project name discards the typed name",
            )
    });
    g.chain(&[
        "NewProjectActivity.saveData(View)",
        "database.DbHelper.insertProject(String)",
        "database.DbHelper.insertCounts(long,List)",
    ]);
    g.screen(
        "NewProjectActivity",
        vec![menu, add, remove, name, "save_project".into()],
        false,
    );
    let new_project = g.nav("new_project", "NewProjectActivity");
    let list = g.branch("projects", 2, 3, 2);
    let help = g.branch("help", 1, 3, 1);
    let prefs = g.branch("settings", 2, 2, 2);
    g.screen(
        "WelcomeActivity",
        vec![new_project, list, help, prefs],
        true,
    );
    App {
        model: g.build(),
        changes: ChangeSet::new(
            functions(&["beecount.database.DbHelper.insertProject(String)"]),
            vec![],
            vec![],
        )
        .unwrap(),
        change_type: ChangeType::ChangedFunctions,
        guidance: None,
    }
}

fn worldweather_like() -> App {
    let mut g = Gen::new("worldweather_like", "worldweather");
    let mut settings = vec![
        g.branch("units", 2, 2, 2),
        g.branch("language", 1, 3, 2),
        g.branch("theme", 1, 2, 3),
        g.branch("notifications", 2, 2, 3),
    ];
    let field = g.edit("api_key_field", "api_key");
    let ok = g.pop("api_key_ok");
    let cancel = g.pop("api_key_cancel");
    g.screen("ApiKeyDialog", vec![field, ok, cancel], false);
    g.with(|b| {
        b.button_with_listener(
            "change_api_key",
            "worldweather.SettingsActivity.changeApiKey(View)",
        )
        .rule(
            "change_api_key",
            ActionKind::Click,
            None,
            vec![
                Effect::RevealFault("ww_crash".into()),
                Effect::GotoActivity("ApiKeyDialog".into()),
            ],
        )
        .fault(
            "ww_crash",
            FaultKind::CrashFault,
            true,
            "the first tap on change API key after install crashes the app",
        )
    });
    g.chain(&[
        "SettingsActivity.changeApiKey(View)",
        "data.ApiKeyStore.load(Context)",
        "data.ApiKeyStore.migrate(SharedPreferences)",
    ]);
    settings.push("change_api_key".into());
    settings.push(g.branch("data_usage", 2, 3, 2));
    settings.push(g.branch("backup", 1, 3, 2));
    g.screen("SettingsActivity", settings, false);

    let overflow = vec![
        g.nav("menu_settings", "SettingsActivity"),
        g.branch("menu_about", 1, 2, 2),
        g.branch("menu_rate", 0, 0, 2),
        g.branch("menu_help", 1, 3, 2),
        g.branch("menu_feedback", 1, 2, 2),
    ];
    g.screen("OverflowMenu", overflow, false);
    let main = vec![
        g.nav("overflow", "OverflowMenu"),
        g.branch("cities", 3, 3, 3),
        g.branch("forecast", 3, 3, 2),
        g.branch("radar", 2, 3, 3),
        g.branch("widgets", 2, 3, 2),
        g.branch("alerts", 2, 2, 3),
        g.branch("maps", 2, 3, 2),
        g.branch("locations", 2, 3, 2),
    ];
    g.screen("MainActivity", main, true);
    App {
        model: g.build(),
        changes: ChangeSet::new(
            functions(&["worldweather.SettingsActivity.changeApiKey(View)"]),
            vec![],
            vec![],
        )
        .unwrap(),
        change_type: ChangeType::ChangedFunctions,
        guidance: None,
    }
}

fn simplefm_like() -> App {
    let mut g = Gen::new("simplefm_like", "simplefm");
    let mut protected = vec![g.branch("protected_sort", 1, 2, 2)];
    protected.push(g.listening(
        "open_protected",
        "ProtectedFolderActivity",
        "openItem(String)",
    ));
    g.chain(&[
        "ProtectedFolderActivity.openItem(String)",
        "helpers.PasswordHelper.verifyAccess(String)",
    ]);
    protected.push(g.button("protected_info"));
    g.screen("ProtectedFolderActivity", protected, false);

    let pw = g.edit("password", "password");
    let confirm = g.edit("confirm_password", "confirm_password");
    g.with(|b| {
        b.value("password_error")
            .button("set_password_ok")
            .rule(
                "set_password_ok",
                ActionKind::Click,
                Some(Guard::ValueEmpty {
                    key: "password".into(),
                }),
                vec![Effect::SetValue {
                    key: "password_error".into(),
                    text: "empty".into(),
                }],
            )
            .rule(
                "set_password_ok",
                ActionKind::Click,
                Some(Guard::ValueEquals {
                    left: "password".into(),
                    right: "confirm_password".into(),
                }),
                vec![Effect::GotoActivity("ProtectedFolderActivity".into())],
            )
            .rule(
                "set_password_ok",
                ActionKind::Click,
                None,
                vec![Effect::SetValue {
                    key: "password_error".into(),
                    text: "mismatch".into(),
                }],
            )
    });
    let cancel = g.pop("set_password_cancel");
    g.screen(
        "PasswordSetupActivity",
        vec![pw, confirm, "set_password_ok".into(), cancel],
        false,
    );

    let settings = vec![
        g.branch("appearance", 1, 3, 2),
        g.branch("file_operations", 1, 3, 2),
        g.nav("password_protection", "PasswordSetupActivity"),
        g.branch("about", 0, 0, 3),
    ];
    g.screen("SettingsActivity", settings, false);
    let main = vec![
        g.nav("settings", "SettingsActivity"),
        g.branch("storage", 2, 3, 2),
        g.branch("bookmarks", 1, 3, 2),
        g.branch("favorites", 2, 2, 2),
    ];
    g.screen("MainActivity", main, true);

    let secret = "correct-horse-42";
    let guidance = Guidance(vec![
        EventDescriptor::new(Some("settings"), ActionKind::Click, None),
        EventDescriptor::new(Some("password_protection"), ActionKind::Click, None),
        EventDescriptor::new(Some("password"), ActionKind::EditText, Some(secret)),
        EventDescriptor::new(Some("confirm_password"), ActionKind::EditText, Some(secret)),
        EventDescriptor::new(Some("set_password_ok"), ActionKind::Click, None),
    ]);
    App {
        model: g.build(),
        changes: ChangeSet::new(
            functions(&["simplefm.ProtectedFolderActivity.openItem(String)"]),
            vec![],
            vec![],
        )
        .unwrap(),
        change_type: ChangeType::ChangedFunctions,
        guidance: Some(guidance),
    }
}

fn hibi_like() -> App {
    let mut g = Gen::new("hibi_like", "hibi");
    let detail = vec![
        g.branch("entry_edit", 1, 2, 2),
        g.listening("entry_share", "EntryDetailActivity", "share(Entry)"),
        g.button("entry_delete"),
    ];
    g.screen("EntryDetailActivity", detail, false);
    let word = vec![
        g.button("word_bookmark"),
        g.branch("word_examples", 1, 2, 2),
    ];
    g.screen("WordDetailActivity", word, false);

    let mut journal = vec![g.branch("new_entry", 1, 3, 2)];
    for i in 0..4 {
        let id = format!("entry_{i}");
        g.with(|b| {
            b.dynamic_item(&id, "EntryDetailActivity")
                .goto(&id, "EntryDetailActivity")
        });
        journal.push(id);
    }
    journal.push(g.branch("journal_filter", 1, 2, 2));
    g.screen("JournalActivity", journal, false);

    let mut dictionary = vec![g.branch("dict_search", 1, 3, 2)];
    for i in 0..3 {
        let id = format!("word_{i}");
        g.with(|b| {
            b.dynamic_item(&id, "WordDetailActivity")
                .goto(&id, "WordDetailActivity")
        });
        dictionary.push(id);
    }
    g.screen("DictionaryActivity", dictionary, false);

    let main = vec![
        g.nav("journal", "JournalActivity"),
        g.branch("quiz", 2, 3, 2),
        g.nav("dictionary", "DictionaryActivity"),
        g.branch("hibi_settings", 1, 3, 2),
    ];
    g.screen("MainActivity", main, true);
    App {
        model: g.build(),
        changes: ChangeSet::new(
            vec![],
            vec![],
            strings(&["EntryDetailActivity", "WordDetailActivity"]),
        )
        .unwrap(),
        change_type: ChangeType::ModifiedActivity,
        guidance: None,
    }
}

fn simpledraw_like() -> App {
    let mut g = Gen::new("simpledraw_like", "simpledraw");
    let tools = vec![
        g.branch("brush_size", 1, 3, 2),
        g.branch("line_tool", 1, 2, 3),
        g.branch("shape_tool", 1, 3, 2),
        g.listening("fill_bucket", "tools.FillTool", "apply(Canvas,int)"),
        g.button("pencil"),
    ];
    g.screen("ToolsActivity", tools, false);
    let main = vec![
        g.nav("tools", "ToolsActivity"),
        g.branch("colors", 2, 3, 2),
        g.branch("canvas_menu", 2, 2, 3),
        g.branch("gallery", 1, 3, 2),
    ];
    g.screen("DrawingActivity", main, true);
    App {
        model: g.build(),
        changes: ChangeSet::new(vec![], strings(&["fill_bucket"]), vec![]).unwrap(),
        change_type: ChangeType::NewElement,
        guidance: None,
    }
}

fn wordscribe_like() -> App {
    let mut g = Gen::new("wordscribe_like", "wordscribe");
    let character = vec![
        g.branch("char_traits", 1, 3, 2),
        g.branch("char_relations", 1, 3, 3),
        g.edit("char_name", "character_name"),
        g.listening("char_portrait", "CharacterActivity", "pickPortrait(View)"),
    ];
    g.screen("CharacterActivity", character, false);
    let story = vec![
        g.nav("characters", "CharacterActivity"),
        g.branch("chapters", 2, 3, 2),
        g.branch("places", 1, 3, 2),
    ];
    g.screen("StoryActivity", story, false);
    let main = vec![
        g.nav("open_story", "StoryActivity"),
        g.branch("templates", 2, 2, 3),
        g.branch("export", 1, 3, 2),
    ];
    g.screen("MainActivity", main, true);
    App {
        model: g.build(),
        changes: ChangeSet::new(vec![], strings(&["char_portrait"]), vec![]).unwrap(),
        change_type: ChangeType::NewElement,
        guidance: None,
    }
}

fn currency_like() -> App {
    let mut g = Gen::new("currency_like", "currency");
    let chart = vec![g.branch("chart_range", 1, 2, 3), g.button("chart_zoom")];
    g.screen("ChartActivity", chart, false);
    let rates = vec![
        g.branch("rate_detail", 1, 3, 2),
        g.branch("rate_alerts", 1, 3, 2),
        g.listening("refresh_rates", "RatesFragment", "refresh(View)"),
        g.nav("show_chart", "ChartActivity"),
    ];
    g.screen("RatesActivity", rates, false);
    let main = vec![
        g.nav("rates", "RatesActivity"),
        g.branch("convert", 2, 3, 2),
        g.branch("currency_settings", 2, 2, 2),
    ];
    g.screen("MainActivity", main, true);
    App {
        model: g.build(),
        changes: ChangeSet::new(vec![], vec![], strings(&["ChartActivity"])).unwrap(),
        change_type: ChangeType::ModifiedActivity,
        guidance: None,
    }
}

fn diary_like() -> App {
    let mut g = Gen::new("diary_like", "diary");
    let stats = vec![g.button("stats_period"), g.branch("stats_export", 1, 2, 2)];
    g.screen("StatsActivity", stats, false);
    let entries = vec![
        g.branch("entry_list", 2, 2, 2),
        g.branch("entry_tags", 1, 3, 2),
        g.edit("entry_filter", "filter_text"),
        g.nav("open_stats", "StatsActivity"),
    ];
    g.screen("EntriesActivity", entries, false);
    let main = vec![
        g.branch("calendar", 2, 3, 2),
        g.nav("entries", "EntriesActivity"),
        g.branch("diary_search", 1, 3, 3),
        g.branch("backup", 1, 2, 2),
    ];
    g.screen("MainActivity", main, true);
    App {
        model: g.build(),
        changes: ChangeSet::new(vec![], vec![], strings(&["StatsActivity"])).unwrap(),
        change_type: ChangeType::ModifiedActivity,
        guidance: None,
    }
}

fn omninotes_like() -> App {
    let mut g = Gen::new("omninotes_like", "omninotes");
    let editor = vec![
        g.edit("note_title", "note_title"),
        g.edit("note_body", "note_body"),
        g.branch("note_category", 1, 3, 2),
        g.branch("note_reminder", 1, 3, 2),
        g.branch("note_share", 1, 2, 2),
        g.listening("attach_image", "DetailFragment", "onAttachImage(View)"),
    ];
    g.chain(&[
        "DetailFragment.onAttachImage(View)",
        "async.AttachmentTask.saveAttachment(Uri)",
        "utils.StorageHelper.copyToAttachments(Context,Uri)",
    ]);
    g.screen("DetailActivity", editor, false);
    let main = vec![
        g.nav("new_note", "DetailActivity"),
        g.branch("notes_list", 2, 3, 2),
        g.branch("categories", 2, 2, 2),
        g.branch("trash", 1, 3, 2),
    ];
    g.screen("MainActivity", main, true);
    App {
        model: g.build(),
        changes: ChangeSet::new(
            functions(&["omninotes.async.AttachmentTask.saveAttachment(Uri)"]),
            vec![],
            vec![],
        )
        .unwrap(),
        change_type: ChangeType::ChangedFunctions,
        guidance: None,
    }
}

fn wifianalyzer_like() -> App {
    let mut g = Gen::new("wifianalyzer_like", "wifianalyzer");
    let graph = vec![
        g.branch("band_filter", 1, 3, 2),
        g.branch("ssid_filter", 1, 2, 3),
        g.button("pause_scan"),
        g.listening(
            "channel_graph",
            "graph.channel.ChannelGraphView",
            "update(WiFiData)",
        ),
    ];
    g.with(|b| {
        b.flag("scan_paused").rule(
            "pause_scan",
            ActionKind::Click,
            None,
            vec![Effect::SetFlag {
                flag: "scan_paused".into(),
                value: true,
            }],
        )
    });
    g.chain(&[
        "graph.channel.ChannelGraphView.update(WiFiData)",
        "graph.channel.ChannelGraphAdapter.updateSeries(List)",
    ]);
    g.screen("ChannelGraphActivity", graph, false);
    let main = vec![
        g.branch("access_points", 2, 3, 2),
        g.nav("channel_tab", "ChannelGraphActivity"),
        g.branch("channel_rating", 1, 3, 2),
        g.branch("vendors", 1, 2, 3),
    ];
    g.screen("MainActivity", main, true);
    App {
        model: g.build(),
        changes: ChangeSet::new(
            functions(&["wifianalyzer.graph.channel.ChannelGraphAdapter.updateSeries(List)"]),
            vec![],
            vec![],
        )
        .unwrap(),
        change_type: ChangeType::ChangedFunctions,
        guidance: None,
    }
}

fn opentasks_like() -> App {
    let mut g = Gen::new("opentasks_like", "opentasks");
    let detail = vec![
        g.branch("task_edit", 1, 3, 2),
        g.branch("task_subtasks", 1, 2, 2),
        g.listening("complete_task", "TaskDetailFragment", "completeTask(View)"),
        g.button("task_star"),
    ];
    g.chain(&[
        "TaskDetailFragment.completeTask(View)",
        "model.TaskAdapter.setStatus(Task,int)",
    ]);
    g.screen("TaskDetailActivity", detail, false);
    let list = vec![
        g.nav("task_0", "TaskDetailActivity"),
        g.branch("list_sort", 1, 2, 3),
        g.branch("list_groups", 1, 3, 2),
    ];
    g.screen("TaskListActivity", list, false);
    let main = vec![
        g.nav("lists", "TaskListActivity"),
        g.branch("due_today", 2, 3, 2),
        g.branch("task_settings", 2, 2, 2),
    ];
    g.screen("MainActivity", main, true);
    App {
        model: g.build(),
        changes: ChangeSet::new(
            functions(&["opentasks.model.TaskAdapter.setStatus(Task,int)"]),
            vec![],
            vec![],
        )
        .unwrap(),
        change_type: ChangeType::ChangedFunctions,
        guidance: None,
    }
}

fn moneybox_like() -> App {
    let mut g = Gen::new("moneybox_like", "moneybox");
    let movement = vec![
        g.edit("movement_amount", "amount"),
        g.branch("movement_category", 1, 3, 2),
        g.branch("movement_date", 1, 2, 3),
        g.listening("save_movement", "AddMovementActivity", "onSave(View)"),
    ];
    g.chain(&[
        "AddMovementActivity.onSave(View)",
        "data.Ledger.addMovement(double,String)",
        "data.Ledger.recomputeBalance()",
    ]);
    g.screen("AddMovementActivity", movement, false);
    let main = vec![
        g.branch("reports", 2, 3, 2),
        g.nav("add_movement", "AddMovementActivity"),
        g.branch("accounts", 2, 2, 2),
        g.branch("money_settings", 1, 3, 2),
    ];
    g.screen("MainActivity", main, true);
    App {
        model: g.build(),
        changes: ChangeSet::new(
            functions(&["moneybox.data.Ledger.addMovement(double,String)"]),
            vec![],
            vec![],
        )
        .unwrap(),
        change_type: ChangeType::ChangedFunctions,
        guidance: None,
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    std::fs::write(path, text).unwrap_or_else(|e| panic!("writing {}: {e}", path.display()));
}

fn emit(root: &Path, app: App) {
    let name = app.model.name.clone();
    let violations = validate_app_model(&app.model);
    assert!(violations.is_empty(), "{name}: {violations:#?}");
    let map = build_combined_map(&app.model);
    let targets = compute_change_impact(&app.model, &map, &app.changes).expect("changes resolve");

    let dir = root.join(&name);
    std::fs::create_dir_all(&dir).expect("corpus dir");
    let model_file = format!("{name}.app.json");
    std::fs::write(dir.join(&model_file), app.model.to_json_string() + "\n")
        .expect("model written");
    write_json(&dir.join("changes.json"), &app.changes);
    write_json(&dir.join("expected_targets.json"), &targets);
    let guidance_file = app.guidance.map(|g| {
        write_json(&dir.join("guidance.json"), &g);
        "guidance.json".to_owned()
    });
    let entry = CorpusEntry {
        name: name.clone(),
        change_type: app.change_type,
        model_file,
        changes_file: "changes.json".into(),
        expected_targets_file: "expected_targets.json".into(),
        faults: app
            .model
            .faults
            .iter()
            .map(|f| FaultNote {
                fault_id: f.fault_id.clone(),
                description: f.description.clone(),
            })
            .collect(),
        guidance_file,
    };
    write_json(&dir.join("entry.json"), &entry);
    println!(
        "{name}: {} activities, {} elements, targets {:?}",
        app.model.activities.len(),
        app.model.elements.len(),
        targets.target_elements
    );
}

fn main() {
    let root = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus"));
    let apps = [
        amaze_like(),
        beecount_like(),
        currency_like(),
        diary_like(),
        hibi_like(),
        moneybox_like(),
        omninotes_like(),
        opentasks_like(),
        simpledraw_like(),
        simplefm_like(),
        wifianalyzer_like(),
        wordscribe_like(),
        worldweather_like(),
    ];
    for app in apps {
        emit(&root, app);
    }
}
