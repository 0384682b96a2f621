//! Pulls program text out of free-form model replies.

/// The first fenced code block, else the longest brace-balanced run of
/// lines. Returns `None` when neither exists.
pub fn extract_code(reply: &str) -> Option<String> {
    fenced_block(reply).or_else(|| balanced_region(reply))
}

fn fenced_block(reply: &str) -> Option<String> {
    let mut lines = reply.lines();
    while let Some(line) = lines.next() {
        if line.trim_start().starts_with("```") {
            let body: Vec<&str> = lines
                .by_ref()
                .take_while(|l| !l.trim_start().starts_with("```"))
                .collect();
            let text = body.join("\n");
            if !text.trim().is_empty() {
                return Some(text + "\n");
            }
        }
    }
    None
}

fn looks_like_code(line: &str) -> bool {
    let t = line.trim_end();
    t.contains('{') || t.contains('}') || t.ends_with(';')
}

/// Longest run of lines whose brace depth never drops below zero and
/// returns to zero at its end, trimmed of prose lines at either edge.
fn balanced_region(reply: &str) -> Option<String> {
    let lines: Vec<&str> = reply.lines().collect();
    let mut best: Option<(usize, usize, usize)> = None;
    for start in 0..lines.len() {
        if !looks_like_code(lines[start]) {
            continue;
        }
        let mut depth: i64 = 0;
        let mut opened = false;
        for (end, line) in lines.iter().enumerate().skip(start) {
            for c in line.chars() {
                match c {
                    '{' => {
                        depth += 1;
                        opened = true;
                    }
                    '}' => depth -= 1,
                    _ => {}
                }
            }
            if depth < 0 {
                break;
            }
            if depth == 0 && opened && looks_like_code(line) {
                let size: usize = lines[start..=end].iter().map(|l| l.len() + 1).sum();
                if best.is_none_or(|(_, _, s)| size > s) {
                    best = Some((start, end, size));
                }
            }
        }
    }
    best.map(|(s, e, _)| lines[s..=e].join("\n") + "\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fenced_block_wins() {
        let reply = "Sure!\n```minilang\nfn main() {\n    print(1);\n}\n```\nDone.";
        assert_eq!(extract_code(reply).unwrap(), "fn main() {\n    print(1);\n}\n");
    }

    #[test]
    fn unfenced_code_is_found() {
        let reply = "Here you go:\nconst int K = 2;\nfn main() {\n    print(K);\n}\nfn f() {\n}\nHope that helps.";
        assert_eq!(
            extract_code(reply).unwrap(),
            "const int K = 2;\nfn main() {\n    print(K);\n}\nfn f() {\n}\n"
        );
    }

    #[test]
    fn prose_yields_nothing() {
        assert_eq!(extract_code("I cannot help with that request."), None);
        assert_eq!(extract_code("```\n\n```"), None);
    }
}
