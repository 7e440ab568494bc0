//! Runs the generate-until-valid loop against a scripted backend.

use charprobe::corpus::EnglishDictionary;
use charprobe::genclient::{collect_valid, CollectSettings, ScriptedBackend};
use charprobe::promptkit::{render_entity_prompt, Entity, PREFIX_PROMPTS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let backend = ScriptedBackend::cycle(
        "mock",
        [
            "#tag @user 🔥",
            "a committed leader who listens to the people.",
            "zzqx vvbn",
            "known for his work on rural roads and schools.",
        ],
    );
    let prompt = render_entity_prompt(&Entity::new("Arjun Mehra", "demo")?, &PREFIX_PROMPTS[0])?;
    let settings = CollectSettings {
        n_target: 4,
        ..Default::default()
    };
    let c = collect_valid(&backend, &prompt, 0, &settings, &EnglishDictionary::bundled())?;
    for a in &c.attempts {
        println!("{} {:<18} {}", a.id, a.reason.as_str(), a.text);
    }
    println!("valid {} fail_count {} attempts {}", c.valid_count(), c.fail_count(), c.attempt_count());
    Ok(())
}
