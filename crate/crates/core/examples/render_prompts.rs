//! Renders every entity prefix-prompt and every tweet question.

use charprobe::promptkit::{render_entity_prompt, Catalog, Entity, Family, PREFIX_PROMPTS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let entity = Entity::new("Arjun Mehra", "demo")?;
    for prefix in &PREFIX_PROMPTS {
        println!("{}", render_entity_prompt(&entity, prefix)?.rendered);
    }
    let catalog = Catalog::bundled();
    let tweet = "farmers need our support";
    for t in catalog.templates().iter().filter(|t| t.family != Family::EntityPrefix) {
        let synopsis = (t.family == Family::RecordRc).then(|| charprobe::promptkit::Concept::Cta.placeholder_synopsis());
        let inst = catalog.render_question(t.family, t.question_id(), tweet, synopsis)?;
        let back = catalog.parse(&t.id, &inst.rendered)?;
        println!("--- {} ({} slots parsed back)\n{}", t.id, back.len(), inst.rendered);
    }
    Ok(())
}
