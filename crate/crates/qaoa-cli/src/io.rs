//! File plumbing: atomic output writes and line-delimited readers.

use std::fs;
use std::io::BufReader;
use std::path::Path;

use qaoa_kit::model::{read_conversations, QaoaConversation, ToolSpec};

use crate::CliError;

/// Writes via a temp file in the target directory, then renames into place,
/// so readers never observe a half-written output.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Internal(format!("creating {}: {e}", dir.display())))?;
    }
    let mut tmp = path.as_os_str().to_os_string();
    tmp.push(format!(".tmp-{}", std::process::id()));
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, bytes)
        .map_err(|e| CliError::Internal(format!("writing {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CliError::Internal(format!("renaming into {}: {e}", path.display()))
    })
}

pub fn open_input(path: &Path) -> Result<BufReader<fs::File>, CliError> {
    let file = fs::File::open(path)
        .map_err(|e| CliError::User(format!("cannot open {}: {e}", path.display())))?;
    Ok(BufReader::new(file))
}

/// Loads a conversation dataset (one wire-format record per line).
pub fn load_conversations(path: &Path) -> Result<Vec<QaoaConversation>, CliError> {
    read_conversations(open_input(path)?)
        .map_err(|e| CliError::User(format!("{}: {e}", path.display())))
}

/// Loads a tool pool (one tool object per line; blank lines skipped).
pub fn load_tool_pool(path: &Path) -> Result<Vec<ToolSpec>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::User(format!("cannot read {}: {e}", path.display())))?;
    let mut tools = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let tool: ToolSpec = serde_json::from_str(line).map_err(|e| {
            CliError::User(format!("{} line {}: {e}", path.display(), lineno + 1))
        })?;
        tool.validate()
            .map_err(|e| CliError::User(format!("{} line {}: {e}", path.display(), lineno + 1)))?;
        tools.push(tool);
    }
    Ok(tools)
}

/// Serializes a tool pool back to one object per line.
pub fn tool_pool_lines(tools: &[ToolSpec]) -> Result<String, CliError> {
    let mut out = String::new();
    for tool in tools {
        let line = serde_json::to_string(tool)
            .map_err(|e| CliError::Internal(format!("tool serialization: {e}")))?;
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

/// Serializes conversations to wire-format lines.
pub fn conversation_lines(convs: &[QaoaConversation]) -> Result<String, CliError> {
    let mut out = String::new();
    for conv in convs {
        let line = qaoa_kit::model::serialize_conversation(conv)
            .map_err(|e| CliError::Internal(format!("serialization: {e}")))?;
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_json_atomic<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let body = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Internal(format!("serialization: {e}")))?;
    write_atomic(path, body.as_bytes())
}
